from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import brute_permutation_shapley, brute_shapley
from cohortshap.cohort import CohortEngine, SimilaritySpec
from cohortshap.datasets import f1, f2, running_example
from cohortshap.shapley import (FunctionOracle, TableOracle, all_targets, baseline_shapley,
                                cohort_shapley, exact_shapley, incremental, mc_shapley,
                                permutation_shapley)
from cohortshap.tabular import CATEGORICAL, Dataset, FeatureColumn

RUNNING_PHI = {
    (False, "f1"): (F(-1, 2), F(1), F(0)),
    (True, "f1"): (F(-139, 252), F(239, 252), F(2, 63)),
    (False, "f2"): (F(-1, 12), F(-1, 12), F(1, 24)),
    (True, "f2"): (F(0), F(0), F(0)),
}


@pytest.mark.parametrize("key", sorted(RUNNING_PHI))
def test_running_example_phi(key):
    dependent, fname = key
    ds = running_example(dependent)
    att = cohort_shapley(ds, SimilaritySpec.exact(3), 0, ds.response(fname))
    np.testing.assert_allclose(att.phi, [float(x) for x in RUNNING_PHI[key]], rtol=0, atol=1e-12)
    assert abs(att.efficiency_gap()) < 1e-12


def test_dependent_f1_exact_rationals():
    # exact arithmetic over the cohort means: the formula reproduces the rationals
    means = {0: F(-3, 7), 1: F(-1), 2: F(1, 2), 4: F(-1, 3), 3: F(0), 5: F(-1), 6: F(1, 2), 7: F(0)}
    phi = brute_shapley(lambda u: means[u], 3, exact=True)
    assert phi == list(RUNNING_PHI[(True, "f1")])


def test_incremental_examples():
    ds = running_example()
    engine = CohortEngine(ds, SimilaritySpec.exact(3))
    r = ds.response("f1")
    tab = TableOracle(engine.lattice([engine.inverse[0]], *engine.aggregate(r))[0])
    assert incremental(tab, 0, 0) == -0.5
    assert incremental(tab, 0, 0b110) == -0.5
    const = FunctionOracle(lambda u: 3.0, 4)
    assert all(incremental(const, j, u) == 0 for j in range(4) for u in range(16) if not u >> j & 1)
    with pytest.raises(ValueError):
        incremental(tab, 1, 0b010)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_exact_matches_subset_formula(d, seed):
    v = np.random.default_rng(seed).normal(size=1 << d)
    got = exact_shapley(TableOracle(v)).phi
    ref = brute_shapley(lambda u: v[u], d)
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_permutation_average_matches_subset_formula(d, seed):
    v = np.random.default_rng(seed).normal(size=1 << d)
    o = TableOracle(v)
    np.testing.assert_allclose(permutation_shapley(o), exact_shapley(o).phi, rtol=0, atol=1e-12)
    np.testing.assert_allclose(brute_permutation_shapley(lambda u: v[u], d),
                               exact_shapley(o).phi, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3))
def test_shift_invariance_and_efficiency(d, seed, c):
    v = np.random.default_rng(seed).normal(size=1 << d)
    a = exact_shapley(TableOracle(v))
    b = exact_shapley(TableOracle(v + c))
    np.testing.assert_allclose(a.phi, b.phi, rtol=0, atol=1e-10)
    assert abs(a.efficiency_gap()) < 1e-10


def test_mc_chain_telescopes_and_is_deterministic():
    v = np.random.default_rng(1).normal(size=1 << 6)
    o = TableOracle(v)
    one = mc_shapley(o, 1, seed=9)
    assert one.phi.sum() == pytest.approx(v[-1] - v[0], abs=1e-12)
    assert np.isnan(one.stderr).all()
    a, b = mc_shapley(o, 500, seed=4), mc_shapley(o, 500, seed=4)
    assert a.phi.tobytes() == b.phi.tobytes() and a.stderr.tobytes() == b.stderr.tobytes()
    assert abs(a.efficiency_gap()) < 1e-12
    assert not np.array_equal(a.phi, mc_shapley(o, 500, seed=5).phi)


def test_mc_close_to_exact():
    v = np.random.default_rng(2).normal(size=1 << 8)
    o = TableOracle(v)
    mc = mc_shapley(o, 20000, seed=0)
    exact = exact_shapley(o).phi
    assert np.all(np.abs(mc.phi - exact) <= 4 * mc.stderr)


def test_mc_on_full_permutation_set_equals_exact():
    v = np.random.default_rng(3).normal(size=8)
    np.testing.assert_allclose(permutation_shapley(TableOracle(v)),
                               exact_shapley(TableOracle(v)).phi, atol=1e-12, rtol=0)


def test_baseline_examples():
    def ev1(x):
        return f1(np.asarray(x, dtype=float))

    def ev2(x):
        return f2(np.asarray(x, dtype=float))

    a = baseline_shapley(ev1, (1, 1, 1), (0, 0, 0))
    np.testing.assert_allclose(a.phi, [1, -2, 0], atol=1e-12)
    assert a.hybrid
    np.testing.assert_array_equal(baseline_shapley(ev2, (1, 0, 1), (1, 0, 1)).phi, 0)
    b = baseline_shapley(ev2, (1, 1, 0), (0, 0, 1))
    assert b.phi.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        baseline_shapley(ev1, (1, 1), (0, 0, 0))


def test_all_targets_running_example():
    ds = running_example()
    atts = all_targets(ds, SimilaritySpec.exact(3), ds.response("f1"))
    assert [a.target for a in atts] == list(range(8))
    for t, a in enumerate(atts):
        assert a.nu_full == ds.response("f1")[t]
        assert abs(a.efficiency_gap()) < 1e-12


def test_all_targets_single_row_and_constant_response():
    f = FeatureColumn("x", CATEGORICAL, [0], ("a",))
    one = all_targets(Dataset((f,), {"r": [2.5]}), SimilaritySpec.exact(1), [2.5])
    np.testing.assert_array_equal(one[0].phi, [0])
    ds = running_example()
    const = all_targets(ds, SimilaritySpec.exact(3), np.full(8, 4.0))
    assert all(np.all(a.phi == 0) for a in const)


def test_all_targets_mc_equals_per_target_mc():
    ds = running_example(dependent=True)
    spec = SimilaritySpec.exact(3)
    r = ds.response("f1")
    batch = all_targets(ds, spec, r, mode="mc", n_perms=200, seed=3, threads=2)
    for t, a in enumerate(batch):
        ref = cohort_shapley(ds, spec, t, r, mode="mc", n_perms=200, seed=3)
        np.testing.assert_array_equal(a.phi, ref.phi)


def test_records_fields():
    ds = running_example()
    att = cohort_shapley(ds, SimilaritySpec.exact(3), 0, ds.response("f1"))
    rec = att.records()
    assert [r["feature"] for r in rec] == ["x1", "x2", "x3"]
    assert set(rec[0]) == {"target_id", "feature", "phi", "nu_empty", "nu_full", "method",
                           "n_perms", "seed", "stderr"}
