"""Bayesian bootstrap, group aggregation and subset-restricted attribution.

The Bayesian bootstrap reweights every row by an independent unit-mean
exponential draw instead of resampling rows, so no row is ever dropped and
individual attributions keep a well defined cohort in every replicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .cohort import EXACT_LIMIT, CohortEngine, SimilaritySpec
from .shapley import (CohortOracle, ShapleyAttribution, all_targets, exact_phi_batch,
                      make_rng, mc_shapley)
from .tabular import DataError, Dataset, ResponseVector


def bb_weights(n, R, seed) -> np.ndarray:
    """``(R, n)`` matrix of i.i.d. Exp(1) weights."""
    if R < 1:
        raise ValueError("need at least one replicate")
    if n < 1:
        raise ValueError("need at least one observation")
    w = make_rng(seed).standard_exponential((R, n))
    # an exact zero has probability ~2**-53 per draw; keep weights strictly positive
    return np.maximum(w, np.finfo(float).tiny)


# ------------------------------------------------------------------ groups


@dataclass(frozen=True)
class Group:
    """Conjunction of ``column = value`` conditions.

    A feature condition matches the level label; a response condition
    matches the numeric value.
    """

    name: str
    conditions: tuple

    def mask(self, ds: Dataset) -> np.ndarray:
        keep = np.ones(ds.n, dtype=bool)
        for col, val in self.conditions:
            if col in ds.feature_names:
                f = ds.feature(col)
                if f.is_categorical:
                    if val not in f.levels:
                        raise DataError(f"group {self.name!r}: {col!r} has no level {val!r}")
                    keep &= f.values == f.levels.index(val)
                else:
                    keep &= f.values == float(val)
            elif col in ds.responses:
                keep &= ds.response(col) == float(val)
            else:
                raise DataError(f"group {self.name!r}: unknown column {col!r}")
        return keep


_SPLIT = re.compile(r"\s*(?:&|∧|\band\b)\s*")


def parse_group(name, text) -> Group:
    """Parse ``"race=Black & sex=Female"`` into a :class:`Group`."""
    conds = []
    for part in _SPLIT.split(text.strip()):
        if "=" not in part:
            raise ValueError(f"group {name!r}: expected column=value, got {part!r}")
        col, val = (s.strip() for s in part.split("=", 1))
        if not col or not val:
            raise ValueError(f"group {name!r}: empty column or value in {part!r}")
        conds.append((col, val))
    return Group(name, tuple(conds))


def _group_masks(groups, ds, n):
    out = {}
    for name, g in dict(groups).items():
        if isinstance(g, Group):
            if ds is None:
                raise ValueError("Group predicates need the dataset")
            m = g.mask(ds)
        elif callable(g):
            m = np.asarray(g(ds), dtype=bool)
        else:
            g = np.asarray(g)
            if g.dtype == bool:
                m = g
            else:
                m = np.zeros(n, dtype=bool)
                m[g] = True
        if m.shape != (n,):
            raise ValueError(f"group {name!r} does not match {n} rows")
        if not m.any():
            raise DataError(f"group {name!r} is empty")
        out[name] = m
    return out


@dataclass
class GroupAggregate:
    name: str
    phi: np.ndarray
    count: int
    feature_names: list = field(default_factory=list)


def aggregate_groups(attributions, groups, ds=None):
    """Per-feature arithmetic mean attribution over each group's members.

    ``attributions`` is aligned with the rows of ``ds``; each group is a
    :class:`Group`, a boolean mask or a list of row positions.
    """
    phi = np.array([a.phi for a in attributions])
    names = attributions[0].feature_names if attributions else []
    out = []
    for name, m in _group_masks(groups, ds, len(phi)).items():
        out.append(GroupAggregate(name, group_mean(phi[m]), int(m.sum()), list(names)))
    return out


def group_mean(phi, w=None):
    """Weighted mean of member attribution rows; plain mean when ``w`` is None."""
    if w is None:
        w = np.ones(len(phi))
    return (w[:, None] * phi).sum(axis=0) / w.sum()


# --------------------------------------------------------------- bootstrap


@dataclass
class BootstrapRun:
    R: int
    seed: int | None
    weights: np.ndarray
    feature_names: list
    targets: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    point: dict = field(default_factory=dict)

    def units(self):
        """``(label, replicate matrix, point estimate)`` for every target and group."""
        for t, reps in self.targets.items():
            yield f"target:{t}", reps, self.point[f"target:{t}"]
        for g, reps in self.groups.items():
            yield f"group:{g}", reps, self.point[f"group:{g}"]


def _phi_rows(engine, rows, wsum, wrsum, mode, n_perms, seed):
    if mode == "exact" or (mode == "auto" and engine.d <= EXACT_LIMIT):
        return exact_phi_batch(engine, rows, wsum, wrsum)[0]
    return np.array([mc_shapley(CohortOracle(engine, r, wsum, wrsum), n_perms, seed).phi
                     for r in rows])


def bootstrap_attributions(ds: Dataset, spec: SimilaritySpec, r, R=1000, seed=0,
                           targets=(), groups=None, weights=None, mode="auto",
                           n_perms=1000, mc_seed=0) -> BootstrapRun:
    """Recompute cohort Shapley under ``R`` Bayesian-bootstrap reweightings.

    Targets are row positions.  Replicate ``k`` uses weight vector
    ``weights[k]`` inside every cohort mean; group results are the
    ``weights[k]``-weighted means of the members' attributions.  Pass
    ``weights`` explicitly to override the exponential draws.
    """
    engine = CohortEngine(ds, spec)
    r = r.values if isinstance(r, ResponseVector) else np.asarray(r, dtype=float)
    W = bb_weights(ds.n, R, seed) if weights is None else np.atleast_2d(
        np.asarray(weights, dtype=float))
    if W.shape[1] != ds.n or (W <= 0).any():
        raise ValueError("bootstrap weights must be positive with one column per row")
    targets = [int(t) for t in targets]
    masks = _group_masks(groups or {}, ds, ds.n)
    needed = set(engine.inverse[targets].tolist())
    for m in masks.values():
        needed.update(np.unique(engine.inverse[m]).tolist())
    rows = np.array(sorted(needed), dtype=np.int64)
    lut = np.full(engine.n_distinct, -1)
    lut[rows] = np.arange(len(rows))
    tpos = lut[engine.inverse[targets]]
    member_pos = {name: lut[engine.inverse[m]] for name, m in masks.items()}

    def one(w):
        wsum, wrsum = engine.aggregate(r, w)
        phi = _phi_rows(engine, rows, wsum, wrsum, mode, n_perms, mc_seed)
        tres = phi[tpos] if targets else np.empty((0, ds.d))
        gres = {}
        for name, m in masks.items():
            gres[name] = group_mean(phi[member_pos[name]], w[m])
        return tres, gres

    run = BootstrapRun(len(W), seed if weights is None else None, W, ds.feature_names)
    t_reps = np.empty((len(W), len(targets), ds.d))
    g_reps = {name: np.empty((len(W), ds.d)) for name in masks}
    for k, w in enumerate(W):
        tres, gres = one(w)
        t_reps[k] = tres
        for name in masks:
            g_reps[name][k] = gres[name]
    tp, gp = one(np.ones(ds.n))
    for i, t in enumerate(targets):
        key = int(ds.index[t])
        run.targets[key] = t_reps[:, i, :]
        run.point[f"target:{key}"] = tp[i]
    for name in masks:
        run.groups[name] = g_reps[name]
        run.point[f"group:{name}"] = gp[name]
    return run


@dataclass
class FeatureSummary:
    unit: str
    feature: str
    point: float
    mean: float
    sd: float
    quantiles: dict
    violin: tuple = field(repr=False, default=())


def _violin(values, points=64):
    from scipy.stats import gaussian_kde

    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-15 * max(1.0, abs(lo)):
        return ((lo,), (float("inf"),))
    kde = gaussian_kde(values)
    pad = 3 * float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(lo - pad, hi + pad, points)
    return tuple(grid.tolist()), tuple(kde(grid).tolist())


def summarize(run: BootstrapRun, quantiles=(0.025, 0.5, 0.975), violin_points=64):
    """Mean, sd and linear-interpolation quantiles per unit and feature."""
    if run.R < 2:
        raise ValueError("dispersion summaries need at least two replicates")
    out = []
    for unit, reps, point in run.units():
        for j, name in enumerate(run.feature_names):
            v = reps[:, j]
            qs = np.quantile(v, quantiles, method="linear")
            out.append(FeatureSummary(unit, name, float(point[j]), float(v.mean()),
                                      float(v.std(ddof=1)),
                                      {float(q): float(x) for q, x in zip(quantiles, qs)},
                                      _violin(v, violin_points)))
    return out


# ---------------------------------------------------------- conditional runs


def conditional_attribution(ds: Dataset, spec: SimilaritySpec, condition, r,
                            **kwargs) -> list[ShapleyAttribution]:
    """Attributions computed on the rows selected by ``condition`` only.

    ``condition`` is a :class:`Group`, a boolean mask or a callable taking
    the dataset.  The cohorts, grand mean and every target come from the
    selected rows; target ids keep the original row numbering.
    """
    if isinstance(condition, Group):
        keep = condition.mask(ds)
    elif callable(condition):
        keep = np.asarray(condition(ds), dtype=bool)
    else:
        keep = np.asarray(condition, dtype=bool)
    if keep.shape != (ds.n,):
        raise ValueError("condition must select among the dataset rows")
    if not keep.any():
        raise DataError("condition selects no rows")
    sub = ds.subset(keep)
    r = r.values if isinstance(r, ResponseVector) else np.asarray(r, dtype=float)
    return all_targets(sub, spec, r[keep], **kwargs)
