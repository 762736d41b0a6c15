import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import brute_anova
from cohortshap.datasets import f1, f2
from cohortshap.shapley import FunctionOracle, TableOracle, exact_shapley
from cohortshap.sobol import (ProductGrid, anova, closed_table, conditional_mean_variance,
                              expected_conditional_variance, jansen_total, pick_freeze_closed,
                              read_grid_csv, shapley_effects, sobol_closed, sobol_total,
                              write_grid_csv)

BITS3 = [[0, 1]] * 3


def test_f1_components():
    vc = anova(ProductGrid.from_function(f1, BITS3))
    expect = np.zeros(8)
    expect[0b001], expect[0b010] = 0.25, 1.0
    np.testing.assert_allclose(vc.sigma2, expect, atol=1e-15)
    assert vc.mu == -0.5
    assert sobol_closed(vc, 0b010) == 1.0 and sobol_total(vc, 0b010) == 1.0
    np.testing.assert_allclose(shapley_effects(vc), [0.25, 1, 0], atol=1e-15)


def test_constant_function():
    vc = anova(ProductGrid.from_function(lambda x: np.full(len(x), 2.5), BITS3))
    assert vc.mu == 2.5 and np.all(vc.sigma2 == 0)


def test_f2_partition_and_total_cross_check():
    grid = ProductGrid.from_function(f2, BITS3)
    vc = anova(grid)
    assert vc.sigma2.sum() == pytest.approx(7 / 64, abs=1e-15)
    assert vc.variance == pytest.approx(7 / 64, abs=1e-15)
    np.testing.assert_allclose(vc.sigma2[1:], 1 / 64, atol=1e-15)
    assert sobol_total(vc, 0b100) == pytest.approx(expected_conditional_variance(grid, 0b100),
                                                   abs=1e-15)
    assert shapley_effects(vc).sum() == pytest.approx(7 / 64, abs=1e-15)
    assert sobol_closed(vc, 0) == 0 and sobol_total(vc, 0b111) == pytest.approx(vc.variance)


def _random_grid(rng, d, kmax=3):
    levels = [np.arange(rng.integers(1, kmax + 1)) for _ in range(d)]
    weights = [rng.dirichlet(np.ones(len(lv))) for lv in levels]
    shape = tuple(len(lv) for lv in levels)
    return ProductGrid(levels, weights, rng.normal(size=shape))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_anova_properties(d, seed):
    grid = _random_grid(np.random.default_rng(seed), d)
    vc = anova(grid)
    shape = grid.values.shape
    total = sum(np.broadcast_to(vc.effect(u), shape) for u in range(1 << d))
    np.testing.assert_allclose(total, grid.values, atol=1e-10, rtol=0)
    jw = grid.joint_weights()
    for u, v in itertools.combinations(range(1 << d), 2):
        ip = (jw * vc.effect(u) * vc.effect(v)).sum()
        assert abs(ip) < 1e-10
    assert vc.sigma2.sum() == pytest.approx(vc.variance, rel=1e-10, abs=1e-14)
    assert np.all(vc.sigma2 >= 0) and vc.sigma2[0] == 0
    full = (1 << d) - 1
    for u in range(1 << d):
        assert sobol_total(vc, u) == pytest.approx(vc.variance - sobol_closed(vc, full & ~u),
                                                   abs=1e-10)
        assert sobol_closed(vc, u) == pytest.approx(conditional_mean_variance(grid, u), abs=1e-10)
        assert sobol_total(vc, u) == pytest.approx(expected_conditional_variance(grid, u),
                                                   abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_shapley_effects_consistency(d, seed):
    grid = _random_grid(np.random.default_rng(seed), d)
    vc = anova(grid)
    eff = shapley_effects(vc)
    np.testing.assert_allclose(eff, exact_shapley(TableOracle(closed_table(vc))).phi, atol=1e-10)
    dual = exact_shapley(FunctionOracle(
        lambda u: expected_conditional_variance(grid, u), d)).phi
    np.testing.assert_allclose(eff, dual, atol=1e-10)
    for j in range(d):
        lo, hi = sobol_closed(vc, 1 << j), sobol_total(vc, 1 << j)
        assert lo - 1e-12 <= eff[j] <= (lo + hi) / 2 + 1e-12


def test_anova_against_moebius_oracle():
    rng = np.random.default_rng(8)
    d = 4
    vals = rng.normal(size=1 << d)
    # grid axis j is bit j of the oracle index
    grid = ProductGrid([[0, 1]] * d, None,
                       vals[[sum(x[j] << j for j in range(d))
                             for x in itertools.product((0, 1), repeat=d)]].reshape((2,) * d))
    vc = anova(grid)
    ref = brute_anova(vals.tolist(), d)
    for u in range(1 << d):
        full = np.broadcast_to(vc.effect(u), (2,) * d)
        got = [full[tuple((x >> j) & 1 for j in range(d))] for x in range(1 << d)]
        np.testing.assert_allclose(got, ref[u], atol=1e-12)


def test_pick_freeze_examples():
    grid = ProductGrid.from_function(f1, BITS3)
    e = pick_freeze_closed(f1, grid.sampler(), 0b010, 50000, seed=1)
    assert abs(e.estimate - 1.0) <= 3 * e.stderr
    g2 = ProductGrid.from_function(f2, BITS3)
    exact = sobol_closed(anova(g2), 0b011)
    e2 = pick_freeze_closed(f2, g2.sampler(), 0b011, 50000, seed=2)
    assert abs(e2.estimate - exact) <= 3 * e2.stderr
    t2 = jansen_total(f2, g2.sampler(), 0b100, 50000, seed=3)
    assert abs(t2.estimate - sobol_total(anova(g2), 0b100)) <= 3 * t2.stderr


def test_estimators_constant_and_deterministic():
    def const(x):
        return np.full(len(x), 4.0)

    s = ProductGrid.from_function(f1, BITS3).sampler()
    for fn in (pick_freeze_closed, jansen_total):
        e = fn(const, s, 0b001, 1000, seed=0)
        assert abs(e.estimate) < 1e-12 and e.stderr < 1e-12
        assert fn(f1, s, 0b001, 500, seed=7) == fn(f1, s, 0b001, 500, seed=7)
    with pytest.raises(ValueError):
        pick_freeze_closed(f1, s, 1, 1, seed=0)


def test_grid_csv_roundtrip_and_independence_check():
    rng = np.random.default_rng(4)
    grid = _random_grid(rng, 3)
    buf = io.StringIO()
    write_grid_csv(grid, buf)
    buf.seek(0)
    back = read_grid_csv(buf)
    np.testing.assert_allclose(back.values, grid.values, rtol=0, atol=0)
    for a, b in zip(back.weights, grid.weights):
        np.testing.assert_allclose(a, b, rtol=1e-12)
    bad = io.StringIO("x1,x2,weight,f\n0,0,0.5,1\n0,1,0,2\n1,0,0,3\n1,1,0.5,4\n")
    with pytest.raises(ValueError, match="independent"):
        read_grid_csv(bad)


def test_grid_validation():
    with pytest.raises(ValueError):
        ProductGrid([[0, 1]], [[0.5, 0.6]], [1.0, 2.0])
    with pytest.raises(ValueError):
        ProductGrid([], None, [])
