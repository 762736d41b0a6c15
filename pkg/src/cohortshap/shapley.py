"""Shapley values of set functions, exact and by permutation sampling.

A value function maps a feature subset (integer bitmask) to a real number.
Attributions explain ``nu(full) - nu(empty)``; ``nu(empty)`` is not forced
to zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bitset import popcount_ints
from .cohort import EXACT_LIMIT, CohortEngine, LatticeTooLarge, SimilaritySpec
from .tabular import Dataset, ResponseVector


# ---------------------------------------------------------------- oracles


class ValueOracle:
    """Memoised value function on subsets of ``range(d)``.

    Subclasses implement :meth:`_evaluate`.  :meth:`table` and
    :meth:`chains` may be overridden with vectorised versions.
    """

    def __init__(self, d):
        if d < 1:
            raise ValueError("need at least one feature")
        self.d = int(d)
        self._cache = {}

    def _evaluate(self, u):
        raise NotImplementedError

    def __call__(self, u):
        u = int(u)
        if u < 0 or u >> self.d:
            raise ValueError(f"subset {u:#b} not within {self.d} features")
        try:
            return self._cache[u]
        except KeyError:
            v = self._cache[u] = float(self._evaluate(u))
            return v

    @property
    def full(self):
        return (1 << self.d) - 1

    def table(self):
        if self.d > EXACT_LIMIT:
            raise LatticeTooLarge(f"d={self.d} exceeds the exact limit {EXACT_LIMIT}")
        return np.array([self(u) for u in range(1 << self.d)])

    def chains(self, orders):
        """Values along the prefix chains of each row of ``orders``.

        Returns shape ``(len(orders), d + 1)``: column ``k`` holds the value of
        the set formed by the first ``k`` features of the order.
        """
        orders = np.atleast_2d(orders)
        prefix = _prefix_masks(orders)
        return np.array([[self(u) for u in row] for row in prefix])


def _prefix_masks(orders):
    orders = np.asarray(orders, dtype=np.int64)
    bits = np.left_shift(np.int64(1), orders)
    prefix = np.bitwise_or.accumulate(bits, axis=1)
    return np.concatenate([np.zeros((len(orders), 1), dtype=np.int64), prefix], axis=1)


class TableOracle(ValueOracle):
    """Value function given as a precomputed table of length ``2**d``."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        d = int(values.size).bit_length() - 1
        if values.ndim != 1 or values.size != 1 << d:
            raise ValueError("table length must be a power of two")
        super().__init__(d)
        self.values = values

    def _evaluate(self, u):
        return self.values[u]

    def table(self):
        return self.values

    def chains(self, orders):
        return self.values[_prefix_masks(np.atleast_2d(orders))]


class FunctionOracle(ValueOracle):
    """Wraps a callable taking an integer bitmask."""

    def __init__(self, fn, d):
        super().__init__(d)
        self.fn = fn

    def _evaluate(self, u):
        return self.fn(u)


class CohortOracle(ValueOracle):
    """Cohort mean response for one target, over the engine's distinct rows."""

    def __init__(self, engine: CohortEngine, row, wsum, wrsum):
        super().__init__(engine.d)
        if not wsum[row] > 0:
            raise ValueError("target weight must be positive")
        self.engine = engine
        self.row = int(row)
        self.wsum = wsum
        self.wrsum = wrsum
        self._sim = engine.similarity([row])[:, 0, :]

    def _evaluate(self, u):
        inside = np.ones(self.engine.n_distinct, dtype=bool)
        for j in range(self.d):
            if u >> j & 1:
                inside &= self._sim[j]
        return self.wrsum[inside].sum() / self.wsum[inside].sum()

    def table(self):
        return self.engine.lattice([self.row], self.wsum, self.wrsum)[0]

    def chains(self, orders):
        orders = np.atleast_2d(orders)
        P, d = orders.shape
        out = np.empty((P, d + 1))
        chunk = max(1, (1 << 22) // self.engine.n_distinct)
        for s in range(0, P, chunk):
            part = orders[s:s + chunk]
            inside = np.ones((len(part), self.engine.n_distinct), dtype=bool)
            out[s:s + chunk, 0] = self.wrsum.sum() / self.wsum.sum()
            for k in range(d):
                inside &= self._sim[part[:, k]]
                out[s:s + chunk, k + 1] = (inside @ self.wrsum) / (inside @ self.wsum)
        return out


# ------------------------------------------------------------ attributions


@dataclass
class ShapleyAttribution:
    phi: np.ndarray
    nu_empty: float
    nu_full: float
    method: str = "exact"
    target: int | None = None
    n_perms: int | None = None
    seed: int | None = None
    stderr: np.ndarray | None = None
    feature_names: list = field(default_factory=list)
    hybrid: bool = False

    @property
    def d(self):
        return len(self.phi)

    @property
    def total(self):
        return self.nu_full - self.nu_empty

    def efficiency_gap(self):
        return float(self.phi.sum() - self.total)

    def records(self):
        names = self.feature_names or [f"x{j + 1}" for j in range(self.d)]
        se = self.stderr if self.stderr is not None else [None] * self.d
        return [
            {"target_id": self.target, "feature": names[j], "phi": float(self.phi[j]),
             "nu_empty": self.nu_empty, "nu_full": self.nu_full, "method": self.method,
             "n_perms": self.n_perms, "seed": self.seed,
             "stderr": None if se[j] is None else float(se[j])}
            for j in range(self.d)
        ]


def incremental(oracle: ValueOracle, j, u):
    """Value added when feature ``j`` joins coalition ``u``."""
    if u >> j & 1:
        raise ValueError(f"feature {j} already in subset {u:#b}")
    return oracle(u | (1 << j)) - oracle(u)


def _level_denominators(d):
    # d * C(d-1, k) exactly; per-level sums are divided once by these integers
    return np.array([d * math.comb(d - 1, k) for k in range(d)], dtype=float)


def shapley_from_tables(values, d):
    """Exact Shapley values for a batch of value tables.

    ``values`` has shape ``(T, 2**d)``.  Increments are summed within each
    coalition size first and then divided by ``d * C(d-1, k)``.
    """
    values = np.atleast_2d(values)
    T = values.shape[0]
    idx = np.arange(1 << d, dtype=np.int64)
    denom = _level_denominators(d)
    phi = np.empty((T, d))
    for j in range(d):
        bit = 1 << j
        u = idx[(idx & bit) == 0]
        level = popcount_ints(u)
        order = np.argsort(level, kind="stable")
        starts = np.concatenate([[0], np.cumsum(np.bincount(level, minlength=d))[:-1]])
        u = u[order]
        inc = values[:, u | bit] - values[:, u]
        sums = np.add.reduceat(inc, starts, axis=1)
        phi[:, j] = (sums / denom).sum(axis=1)
    return phi


def exact_shapley(oracle: ValueOracle) -> ShapleyAttribution:
    if oracle.d > EXACT_LIMIT:
        raise LatticeTooLarge(f"d={oracle.d} exceeds the exact limit {EXACT_LIMIT}")
    values = oracle.table()
    phi = shapley_from_tables(values[None, :], oracle.d)[0]
    return ShapleyAttribution(phi, float(values[0]), float(values[-1]), "exact")


def permutation_shapley(oracle: ValueOracle) -> np.ndarray:
    """Average increments over all ``d!`` orders (small ``d`` only)."""
    import itertools

    orders = np.array(list(itertools.permutations(range(oracle.d))))
    vals = oracle.chains(orders)
    credits = np.empty(orders.shape)
    np.put_along_axis(credits, orders, np.diff(vals, axis=1), axis=1)
    return credits.mean(axis=0)


def make_rng(seed):
    """Counter-based generator used for every seeded draw in the package."""
    return np.random.Generator(np.random.Philox(seed))


def mc_shapley(oracle: ValueOracle, n_perms, seed) -> ShapleyAttribution:
    """Permutation Monte Carlo estimate with per-feature standard errors.

    Each permutation walks from the empty set to the full set, crediting
    every feature its increment on entry.
    """
    n_perms = int(n_perms)
    if n_perms < 1:
        raise ValueError("n_perms must be at least 1")
    rng = make_rng(seed)
    base = np.tile(np.arange(oracle.d), (n_perms, 1))
    orders = rng.permuted(base, axis=1)
    vals = oracle.chains(orders)
    credits = np.empty(orders.shape)
    np.put_along_axis(credits, orders, np.diff(vals, axis=1), axis=1)
    phi = credits.mean(axis=0)
    if n_perms > 1:
        se = credits.std(axis=0, ddof=1) / math.sqrt(n_perms)
    else:
        se = np.full(oracle.d, np.nan)
    return ShapleyAttribution(phi, float(vals[0, 0]), float(vals[0, -1]), "mc",
                              n_perms=n_perms, seed=seed, stderr=se)


def _run(oracle, mode, n_perms, seed):
    if mode == "auto":
        mode = "exact" if oracle.d <= EXACT_LIMIT else "mc"
    if mode == "exact":
        return exact_shapley(oracle)
    if mode == "mc":
        return mc_shapley(oracle, n_perms, seed)
    raise ValueError(f"unknown mode {mode!r}")


# ------------------------------------------------------------ bindings


def _response(r):
    return r.values if isinstance(r, ResponseVector) else np.asarray(r, dtype=float)


def cohort_shapley(ds: Dataset, spec: SimilaritySpec, t, r, w=None, mode="auto",
                   n_perms=1000, seed=0, engine=None) -> ShapleyAttribution:
    """Cohort Shapley attribution of response ``r`` for target row ``t``."""
    engine = engine or CohortEngine(ds, spec)
    wsum, wrsum = engine.aggregate(_response(r), w)
    oracle = CohortOracle(engine, engine.inverse[t], wsum, wrsum)
    att = _run(oracle, mode, n_perms, seed)
    att.target = int(ds.index[t])
    att.feature_names = ds.feature_names
    return att


def all_targets(ds: Dataset, spec: SimilaritySpec, r, w=None, mode="auto", n_perms=1000,
                seed=0, targets=None, threads=1, engine=None):
    """Cohort Shapley attributions for every target, ordered by row position.

    In exact mode all targets sharing a distinct feature row are computed
    once, batched across distinct rows.  Monte Carlo runs use the same seed
    for every target.
    """
    engine = engine or CohortEngine(ds, spec)
    r = _response(r)
    wsum, wrsum = engine.aggregate(r, w)
    targets = np.arange(ds.n) if targets is None else np.asarray(targets, dtype=np.int64)
    rows = engine.inverse[targets]
    if np.any(wsum[rows] <= 0):
        raise ValueError("every target needs positive weight")
    if mode == "auto":
        mode = "exact" if ds.d <= EXACT_LIMIT else "mc"
    names = ds.feature_names
    uniq, back = np.unique(rows, return_inverse=True)
    if mode == "exact":
        phi, nu0, nu1 = _exact_batch(engine, uniq, wsum, wrsum, threads)
        return [ShapleyAttribution(phi[b].copy(), float(nu0[b]), float(nu1[b]), "exact",
                                   target=int(ds.index[t]), feature_names=names)
                for t, b in zip(targets, back)]
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")

    def one(row):
        return mc_shapley(CohortOracle(engine, row, wsum, wrsum), n_perms, seed)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        done = list(pool.map(one, uniq))
    out = []
    for t, b in zip(targets, back):
        a = done[b]
        out.append(ShapleyAttribution(a.phi.copy(), a.nu_empty, a.nu_full, "mc",
                                      target=int(ds.index[t]), n_perms=a.n_perms,
                                      seed=a.seed, stderr=a.stderr.copy(),
                                      feature_names=names))
    return out


def _exact_batch(engine, rows, wsum, wrsum, threads=1):
    d = engine.d
    size = 1 << d
    chunk = max(1, (1 << 22) // max(size, engine.n_distinct))
    parts = [rows[s:s + chunk] for s in range(0, len(rows), chunk)]

    def work(part):
        tab = engine.lattice(part, wsum, wrsum)
        return shapley_from_tables(tab, d), tab[:, 0], tab[:, -1]

    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(work, parts))
    else:
        res = [work(p) for p in parts]
    if not res:
        return np.empty((0, d)), np.empty(0), np.empty(0)
    return tuple(np.concatenate(x) for x in zip(*res))


def exact_phi_batch(engine, rows, wsum, wrsum):
    """``(phi, nu_empty, nu_full)`` arrays for distinct rows (exact mode)."""
    return _exact_batch(engine, np.asarray(rows), wsum, wrsum)


def baseline_shapley(f, x_t, x_b, mode="auto", n_perms=1000, seed=0) -> ShapleyAttribution:
    """Shapley values of ``u -> f(x_t on u, x_b elsewhere)``.

    These hybrid points need not be observed data; the result carries
    ``hybrid=True`` to say so.
    """
    x_t = np.asarray(x_t)
    x_b = np.asarray(x_b)
    if x_t.shape != x_b.shape or x_t.ndim != 1:
        raise ValueError("target and baseline must be tuples of equal arity")
    d = len(x_t)

    def value(u):
        take = np.array([(u >> j) & 1 for j in range(d)], dtype=bool)
        return f(np.where(take, x_t, x_b))

    att = _run(FunctionOracle(value, d), mode, n_perms, seed)
    att.hybrid = True
    return att
