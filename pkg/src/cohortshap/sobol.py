"""Functional ANOVA on finite product grids, Sobol' indices and Shapley effects.

Inputs are independent: dimension ``j`` takes ``levels[j]`` with
probabilities ``weights[j]`` and the joint weight of a grid point is the
product.  Subsets of dimensions are integer bitmasks as elsewhere.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .bitset import popcount_ints
from .shapley import make_rng

#: Largest dimension for which subset tables are stored.
MAX_DIM = 20
#: Largest number of joint grid points evaluated.
MAX_POINTS = 10_000_000


@dataclass
class ProductGrid:
    """Function values on a full product grid with independent marginals.

    ``values`` has shape ``(k_1, ..., k_d)``.
    """

    levels: list
    weights: list
    values: np.ndarray

    def __post_init__(self):
        self.levels = [np.asarray(lv) for lv in self.levels]
        if not self.levels:
            raise ValueError("grid needs at least one dimension")
        if len(self.levels) > MAX_DIM:
            raise ValueError(f"grid dimension {len(self.levels)} exceeds {MAX_DIM}")
        if self.weights is None:
            self.weights = [np.full(len(lv), 1.0 / len(lv)) for lv in self.levels]
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.values = np.asarray(self.values, dtype=float)
        shape = tuple(len(lv) for lv in self.levels)
        if any(k < 1 for k in shape):
            raise ValueError("every dimension needs at least one level")
        if self.values.shape != shape:
            raise ValueError(f"values have shape {self.values.shape}, expected {shape}")
        for j, w in enumerate(self.weights):
            if w.shape != (shape[j],) or (w < 0).any() or abs(w.sum() - 1) > 1e-12:
                raise ValueError(f"weights of dimension {j} must be nonnegative and sum to 1")

    @property
    def d(self):
        return len(self.levels)

    @classmethod
    def from_function(cls, f, levels, weights=None):
        """Evaluate ``f`` on every joint point.

        ``f`` receives an ``(N, d)`` array of points and returns ``N`` values.
        """
        levels = [np.asarray(lv) for lv in levels]
        shape = tuple(len(lv) for lv in levels)
        if int(np.prod(shape)) > MAX_POINTS:
            raise ValueError(f"grid has more than {MAX_POINTS} points")
        mesh = np.meshgrid(*levels, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(f(pts), dtype=float).reshape(shape)
        return cls(levels, weights, vals)

    def joint_weights(self):
        w = np.ones(())
        for wj in self.weights:
            w = np.multiply.outer(w, wj)
        return w

    def points(self):
        mesh = np.meshgrid(*self.levels, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sampler(self):
        """Independent per-dimension sampler ``(rng, N) -> (N, d)``."""
        def draw(rng, N):
            cols = [lv[rng.choice(len(lv), size=N, p=w)]
                    for lv, w in zip(self.levels, self.weights)]
            return np.stack(cols, axis=1)
        return draw

    def function(self):
        """Lookup of grid values for points made of grid levels."""
        lookup = [{v.item(): i for i, v in enumerate(lv)} for lv in self.levels]

        def f(x):
            x = np.atleast_2d(x)
            idx = tuple(np.array([lookup[j][v] for v in x[:, j].tolist()])
                        for j in range(self.d))
            return self.values[idx]
        return f


def _mean_over(a, w, axis):
    shape = [1] * a.ndim
    shape[axis] = len(w)
    return (a * w.reshape(shape)).sum(axis=axis, keepdims=True)


@dataclass
class VarianceComponents:
    """ANOVA of a grid function.

    ``sigma2[u]`` is the variance of effect ``u``; ``effects[u]`` the effect
    itself as an array broadcastable to the grid shape (size 1 on the axes
    outside ``u``).
    """

    mu: float
    sigma2: np.ndarray
    variance: float
    d: int
    effects: list = field(default=None, repr=False)
    weights: list = field(default=None, repr=False)

    def effect(self, u):
        return self.effects[u]


def anova(grid: ProductGrid) -> VarianceComponents:
    """Functional ANOVA by sweeping the dimensions one at a time.

    After sweeping dimension ``j`` every partial term ``g_v`` splits into its
    mean over ``x_j`` (stays ``g_v``) and the remainder (becomes
    ``g_{v + j}``).  After all sweeps ``g_u`` is the effect ``f_u``:
    the conditional mean given ``x_u`` with every lower-order effect removed.
    """
    d = grid.d
    terms = {0: grid.values}
    for j in range(d):
        w = grid.weights[j]
        new = {}
        for v, g in terms.items():
            m = _mean_over(g, w, j)
            new[v] = m
            new[v | (1 << j)] = g - m
        terms = new
    effects = [terms[u] for u in range(1 << d)]
    sigma2 = np.zeros(1 << d)
    for u in range(1, 1 << d):
        e = effects[u]
        wu = np.ones(())
        for j in range(d):
            wu = np.multiply.outer(wu, grid.weights[j] if u >> j & 1 else np.ones(1))
        sigma2[u] = float((wu * e * e).sum())
    mu = float(effects[0].reshape(-1)[0])
    jw = grid.joint_weights()
    variance = float((jw * (grid.values - mu) ** 2).sum())
    return VarianceComponents(mu, sigma2, variance, d, effects, grid.weights)


def _subset_mask(d, u, contained):
    idx = np.arange(1 << d)
    return (idx & ~u) == 0 if contained else (idx & u) != 0


def sobol_closed(vc: VarianceComponents, u) -> float:
    """Closed index: total of the components of subsets of ``u``."""
    return float(vc.sigma2[_subset_mask(vc.d, u, True)].sum())


def sobol_total(vc: VarianceComponents, u) -> float:
    """Total index: total of the components touching ``u``."""
    return float(vc.sigma2[_subset_mask(vc.d, u, False)].sum())


def closed_table(vc: VarianceComponents) -> np.ndarray:
    """Closed indices for every subset (subset sums of the components)."""
    t = vc.sigma2.copy()
    for j in range(vc.d):
        view = t.reshape(-1, 2, 1 << j)
        view[:, 1, :] += view[:, 0, :]
    return t


def shapley_effects(vc: VarianceComponents) -> np.ndarray:
    """Each component shared equally among the dimensions it involves."""
    idx = np.arange(1 << vc.d)
    size = popcount_ints(idx)
    share = np.zeros(1 << vc.d)
    share[1:] = vc.sigma2[1:] / size[1:]
    return np.array([share[(idx >> j) & 1 == 1].sum() for j in range(vc.d)])


def conditional_mean_variance(grid: ProductGrid, u) -> float:
    """``var(E(f | x_u))`` computed directly on the grid."""
    g = grid.values
    for j in range(grid.d):
        if not u >> j & 1:
            g = _mean_over(g, grid.weights[j], j)
    jw = grid.joint_weights()
    g = np.broadcast_to(g, jw.shape)
    mu = (jw * g).sum()
    return float((jw * (g - mu) ** 2).sum())


def expected_conditional_variance(grid: ProductGrid, u) -> float:
    """``E(var(f | x_{-u}))`` computed directly on the grid."""
    g = grid.values
    m = g
    for j in range(grid.d):
        if u >> j & 1:
            m = _mean_over(m, grid.weights[j], j)
    jw = grid.joint_weights()
    return float((jw * (g - m) ** 2).sum())


# ------------------------------------------------------------ estimators


@dataclass(frozen=True)
class SobolEstimate:
    estimate: float
    stderr: float
    n: int


def _jackknife_se(stat, cols):
    """Delete-one jackknife standard error for a function of column means."""
    N = cols[0].shape[0]
    sums = [c.sum() for c in cols]
    loo = [(s - c) / (N - 1) for s, c in zip(sums, cols)]
    reps = stat(*loo)
    return float(np.sqrt((N - 1) / N * ((reps - reps.mean()) ** 2).sum()))


def _draw_pairs(sampler, N, seed):
    if N < 2:
        raise ValueError("need at least two samples")
    rng = make_rng(seed)
    draws = np.asarray(sampler(rng, 2 * N))
    return draws[:N], draws[N:]


def _hybrid(a, b, u):
    take = np.array([(u >> j) & 1 for j in range(a.shape[1])], dtype=bool)
    return np.where(take, a, b)


def pick_freeze_closed(f, sampler, u, N, seed) -> SobolEstimate:
    """Closed index estimate ``mean f(x) f(x_u : z_{-u}) - mean f(x) * mean f(z)``.

    The squared mean is the product of two independent sample means.
    """
    x, z = _draw_pairs(sampler, N, seed)
    fx = np.asarray(f(x), dtype=float)
    fy = np.asarray(f(_hybrid(x, z, u)), dtype=float)
    fz = np.asarray(f(z), dtype=float)

    def stat(a, b, c):
        return a - b * c

    est = float(stat(np.mean(fx * fy), fx.mean(), fz.mean()))
    return SobolEstimate(est, _jackknife_se(stat, [fx * fy, fx, fz]), N)


def jansen_total(f, sampler, u, N, seed) -> SobolEstimate:
    """Total index estimate ``mean (f(x) - f(x_{-u} : z_u))**2 / 2``."""
    x, z = _draw_pairs(sampler, N, seed)
    fx = np.asarray(f(x), dtype=float)
    fy = np.asarray(f(_hybrid(z, x, u)), dtype=float)
    sq = 0.5 * (fx - fy) ** 2
    return SobolEstimate(float(sq.mean()), _jackknife_se(lambda a: a, [sq]), N)


# ------------------------------------------------------------ grid CSV


def read_grid_csv(source) -> ProductGrid:
    """Read a grid from CSV rows ``level_1, ..., level_d, weight, f``.

    Every joint point must appear once and the joint weights must factor
    into the product of their marginals.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    header, body = rows[0], rows[1:]
    if len(header) < 3:
        raise ValueError("grid CSV needs at least one level column plus weight and f")
    d = len(header) - 2
    pts = np.array([[float(c) for c in r[:d]] for r in body])
    wts = np.array([float(r[d]) for r in body])
    fv = np.array([float(r[d + 1]) for r in body])
    levels = [np.unique(pts[:, j]) for j in range(d)]
    shape = tuple(len(lv) for lv in levels)
    if len(body) != int(np.prod(shape)):
        raise ValueError("grid CSV does not list every joint point exactly once")
    idx = tuple(np.searchsorted(levels[j], pts[:, j]) for j in range(d))
    values = np.full(shape, np.nan)
    joint = np.zeros(shape)
    values[idx] = fv
    joint[idx] = wts
    if np.isnan(values).any():
        raise ValueError("grid CSV has repeated joint points")
    total = joint.sum()
    joint = joint / total
    marg = []
    for j in range(d):
        axes = tuple(k for k in range(d) if k != j)
        marg.append(joint.sum(axis=axes))
    prod = np.ones(())
    for m in marg:
        prod = np.multiply.outer(prod, m)
    if not np.allclose(prod, joint, rtol=1e-9, atol=1e-12):
        raise ValueError("grid weights are not a product of independent marginals")
    return ProductGrid(levels, [m / m.sum() for m in marg], values)


def write_grid_csv(grid: ProductGrid, fh, names=None):
    names = names or [f"x{j + 1}" for j in range(grid.d)]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(names) + ["weight", "f"])
    jw = grid.joint_weights().ravel()
    for p, wt, v in zip(grid.points(), jw, grid.values.ravel()):
        w.writerow([f"{x:.17g}" for x in p] + [f"{wt:.17g}", f"{v:.17g}"])
