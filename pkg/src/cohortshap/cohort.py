"""Similarity rules, cohort bitmasks and the cohort value function.

For a target row ``t`` every feature ``j`` gets a bitset over the ``n`` rows
marking which rows are similar to ``t`` on that feature.  The cohort of a
feature subset ``u`` is the intersection of the bitsets in ``u``; its value
is the (weighted) mean response over the cohort.

Subsets of features are encoded as integer bitmasks: feature ``j`` is bit
``1 << j``.

Two routes compute the full table of cohort means over all ``2**d`` subsets:

* ``"zeta"`` (default): each row is summarised by its signature, the bitmask
  of features on which it is similar to ``t``.  Row ``i`` belongs to the
  cohort of ``u`` exactly when its signature contains ``u``, so the cohort
  sums are superset sums over the signature histogram, done one feature at a
  time in ``O(d 2**d)`` after an ``O(n d)`` pass.
* ``"bitset"``: walks the subsets by increasing size, forming each cohort
  with a single word-wise intersection of a parent cohort and one feature
  bitset, then takes the masked weighted sums.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import bitset
from .tabular import CONTINUOUS, Dataset, ResponseVector, bin_index

#: Largest ``d`` for which the full subset lattice is materialised.
EXACT_LIMIT = 25


class LatticeTooLarge(ValueError):
    """The exact lattice would exceed :data:`EXACT_LIMIT`; use Monte Carlo."""


# ------------------------------------------------------------------ rules


@dataclass(frozen=True)
class ExactMatch:
    def similar(self, values, target):
        values, target = np.asarray(values), np.asarray(target)
        eq = values == target
        if values.dtype.kind == "f":
            eq |= np.isnan(values) & np.isnan(target)
        return eq

    def __str__(self):
        return "exact"


@dataclass(frozen=True)
class AbsWindow:
    """Similar when ``|x_i - x_t| <= delta``."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0 or not math.isfinite(self.delta):
            raise ValueError(f"window width must be a positive finite number, got {self.delta}")

    def similar(self, values, target):
        values, target = np.asarray(values, float), np.asarray(target, float)
        with np.errstate(invalid="ignore"):
            hit = np.abs(values - target) <= self.delta
        return hit | (np.isnan(values) & np.isnan(target))

    def __str__(self):
        return f"abs({self.delta!r})"


@dataclass(frozen=True)
class RelWindow:
    """Similar when ``|x_i - x_t| <= delta * |x_t|``.

    At ``x_t = 0`` the window shrinks to rows with ``x_i = 0``.
    """

    delta: float

    def __post_init__(self):
        if not self.delta > 0 or not math.isfinite(self.delta):
            raise ValueError(f"window width must be a positive finite number, got {self.delta}")

    def similar(self, values, target):
        values, target = np.asarray(values, float), np.asarray(target, float)
        with np.errstate(invalid="ignore"):
            hit = np.abs(values - target) <= self.delta * np.abs(target)
        return hit | (np.isnan(values) & np.isnan(target))

    def __str__(self):
        return f"rel({self.delta!r})"


@dataclass(frozen=True)
class SharedBin:
    """Similar when both values fall in the same interval of ``edges``.

    Intervals are ``[e_m, e_{m+1})`` with the last one closed; values below
    the first or above the last edge form their own two outer bins.
    """

    edges: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.edges)
        if len(e) < 2 or any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError("bin edges must be strictly ascending with at least two entries")
        object.__setattr__(self, "edges", e)

    def similar(self, values, target):
        return bin_index(values, self.edges) == bin_index(target, self.edges)

    def __str__(self):
        return "bins(" + ", ".join(f"{e!r}" for e in self.edges) + ")"


_RULE_RE = re.compile(r"^\s*(exact|abs|rel|bins)\s*(?:\((.*)\))?\s*$")


def parse_rule(text):
    """Parse ``exact``, ``abs(0.5)``, ``rel(0.1)`` or ``bins(0, 1, 4)``."""
    m = _RULE_RE.match(text)
    if not m:
        raise ValueError(f"unknown similarity rule {text!r}")
    name, arg = m.group(1), m.group(2)
    if name == "exact":
        if arg:
            raise ValueError("exact takes no argument")
        return ExactMatch()
    if arg is None or not arg.strip():
        raise ValueError(f"{name} needs an argument")
    nums = [float(a) for a in arg.split(",")]
    if name == "bins":
        return SharedBin(tuple(nums))
    if len(nums) != 1:
        raise ValueError(f"{name} takes a single width")
    return (AbsWindow if name == "abs" else RelWindow)(nums[0])


@dataclass(frozen=True)
class SimilaritySpec:
    """One similarity rule per feature, in dataset feature order."""

    rules: tuple

    def __post_init__(self):
        for r in self.rules:
            if not hasattr(r, "similar"):
                raise ValueError(f"unknown feature rule {r!r}")
        object.__setattr__(self, "rules", tuple(self.rules))

    @classmethod
    def exact(cls, d):
        return cls((ExactMatch(),) * d)

    @classmethod
    def for_dataset(cls, ds: Dataset, rules=None):
        """Spec for ``ds`` with ``rules`` (name -> rule or rule text) overriding
        the default exact match."""
        rules = dict(rules or {})
        out = []
        for f in ds.features:
            r = rules.pop(f.name, ExactMatch())
            if isinstance(r, str):
                r = parse_rule(r)
            if not isinstance(r, ExactMatch) and f.kind != CONTINUOUS:
                raise ValueError(f"rule {r} needs a continuous feature, {f.name!r} is {f.kind}")
            out.append(r)
        if rules:
            raise ValueError(f"similarity rules for unknown features: {sorted(rules)}")
        return cls(tuple(out))

    def check(self, ds):
        if len(self.rules) != ds.d:
            raise ValueError(f"spec has {len(self.rules)} rules for {ds.d} features")


# ----------------------------------------------------------- masks and cohorts


@dataclass(frozen=True)
class SimilarityMask:
    """Per-feature similarity bitsets for one target.

    ``bits[j]`` is a uint64 word array; bit ``i`` is set when row ``i`` is
    similar to the target on feature ``j``.
    """

    target: int
    bits: np.ndarray
    n: int

    @property
    def d(self):
        return self.bits.shape[0]

    def row(self, j):
        return bitset.unpack(self.bits[j], self.n)

    def as_bool(self):
        return bitset.unpack(self.bits, self.n)

    def signatures(self):
        """Per-row bitmask of the features on which the row matches."""
        flags = self.as_bool()
        sig = np.zeros(self.n, dtype=np.int64)
        for j in range(self.d):
            sig |= flags[j].astype(np.int64) << j
        return sig


@dataclass(frozen=True)
class CohortSet:
    u: int
    members: np.ndarray
    size: int
    n: int

    def indices(self):
        return np.flatnonzero(bitset.unpack(self.members, self.n))


def _similarity_rows(ds, spec, t):
    return np.stack([rule.similar(f.values, f.values[t])
                     for rule, f in zip(spec.rules, ds.features)])


def build_mask(ds: Dataset, spec: SimilaritySpec, t: int) -> SimilarityMask:
    spec.check(ds)
    if not 0 <= t < ds.n:
        raise IndexError(f"target {t} outside 0..{ds.n - 1}")
    flags = _similarity_rows(ds, spec, t)
    bits = bitset.pack(flags)
    bits.setflags(write=False)
    return SimilarityMask(t, bits, ds.n)


def cohort(mask: SimilarityMask, u: int) -> CohortSet:
    members = bitset.full(mask.n)
    for j in range(mask.d):
        if u >> j & 1:
            members = members & mask.bits[j]
    return CohortSet(u, members, bitset.popcount(members), mask.n)


def _resolve(r, w, n):
    r = r.values if isinstance(r, ResponseVector) else np.asarray(r, dtype=float)
    if r.shape != (n,):
        raise ValueError(f"response has shape {r.shape}, expected ({n},)")
    if w is None:
        w = np.ones(n)
    else:
        w = np.asarray(w, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights have shape {w.shape}, expected ({n},)")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
    return r, w


def cohort_value(mask: SimilarityMask, u: int, r, w=None) -> float:
    """Weighted mean response over the cohort of ``u``."""
    r, w = _resolve(r, w, mask.n)
    if not w[mask.target] > 0:
        raise ValueError("target weight must be positive")
    inside = bitset.unpack(cohort(mask, u).members, mask.n)
    return float(np.dot(w[inside], r[inside]) / w[inside].sum())


def superset_sums(table, d):
    """In place: ``table[..., u] <- sum of table[..., v] over v containing u``."""
    lead = table.shape[:-1]
    for j in range(d):
        view = table.reshape(*lead, -1, 2, 1 << j)
        view[..., 0, :] += view[..., 1, :]
    return table


def lattice_from_signatures(sig, w, wr, d):
    """Cohort means for every subset from per-row signatures.

    ``sig`` has shape ``(T, m)``: one row of signatures per target over the
    same ``m`` (possibly aggregated) rows with weight sums ``w`` and weighted
    response sums ``wr``.  Returns a ``(T, 2**d)`` table.
    """
    sig = np.atleast_2d(sig)
    T = sig.shape[0]
    size = 1 << d
    flat = (sig + (np.arange(T, dtype=np.int64) * size)[:, None]).ravel()
    wt = np.bincount(flat, weights=np.tile(w, T), minlength=T * size).reshape(T, size)
    ws = np.bincount(flat, weights=np.tile(wr, T), minlength=T * size).reshape(T, size)
    superset_sums(wt, d)
    superset_sums(ws, d)
    return ws / wt


def lattice_values(mask: SimilarityMask, r, w=None, method="zeta") -> np.ndarray:
    """Table of cohort means indexed by subset bitmask, length ``2**d``."""
    d = mask.d
    if d > EXACT_LIMIT:
        raise LatticeTooLarge(f"d={d} exceeds the exact limit {EXACT_LIMIT}; "
                              "use the Monte Carlo path")
    r, w = _resolve(r, w, mask.n)
    if not w[mask.target] > 0:
        raise ValueError("target weight must be positive")
    if method == "zeta":
        return lattice_from_signatures(mask.signatures(), w, w * r, d)[0]
    if method == "bitset":
        return _lattice_bitset(mask, r, w)
    raise ValueError(f"unknown lattice method {method!r}")


def _lattice_bitset(mask, r, w):
    d, n = mask.d, mask.n
    size = 1 << d
    order = sorted(range(size), key=lambda u: (bin(u).count("1"), u))
    cohorts = np.empty((size, mask.bits.shape[1]), dtype="<u8")
    out = np.empty(size)
    wr = w * r
    for u in order:
        if u == 0:
            cohorts[0] = bitset.full(n)
        else:
            low = (u & -u).bit_length() - 1
            cohorts[u] = cohorts[u & (u - 1)] & mask.bits[low]
        inside = bitset.unpack(cohorts[u], n)
        out[u] = wr[inside].sum() / w[inside].sum()
    return out


# ------------------------------------------------------------ batched engine


class CohortEngine:
    """Cohort queries for many targets over one dataset.

    Rows with identical feature values are interchangeable for every rule,
    so they are collapsed once into distinct rows; targets sharing a
    distinct row share all cohort values.
    """

    def __init__(self, ds: Dataset, spec: SimilaritySpec):
        spec.check(ds)
        self.ds = ds
        self.spec = spec
        keys = np.empty((ds.n, ds.d), dtype=np.int64)
        for j, f in enumerate(ds.features):
            v = f.values
            if f.kind == CONTINUOUS:
                v = np.where(np.isnan(v), np.inf, v)
            keys[:, j] = np.unique(v, return_inverse=True)[1].ravel()
        _, rep, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        self.rep = rep
        self.inverse = inverse.ravel()
        self.columns = [f.values[rep] for f in ds.features]

    @property
    def d(self):
        return self.ds.d

    @property
    def n_distinct(self):
        return len(self.rep)

    def aggregate(self, r, w=None):
        """Weight and weighted-response sums per distinct row."""
        r, w = _resolve(r, w, self.ds.n)
        m = self.n_distinct
        return (np.bincount(self.inverse, weights=w, minlength=m),
                np.bincount(self.inverse, weights=w * r, minlength=m))

    def similarity(self, rows):
        """Boolean ``(d, len(rows), n_distinct)`` similarity of distinct rows."""
        rows = np.asarray(rows)
        return np.stack([rule.similar(col[None, :], col[rows][:, None])
                         for rule, col in zip(self.spec.rules, self.columns)])

    def signatures(self, rows):
        sim = self.similarity(rows)
        sig = np.zeros(sim.shape[1:], dtype=np.int64)
        for j in range(self.d):
            sig |= sim[j].astype(np.int64) << j
        return sig

    def lattice(self, rows, wsum, wrsum):
        """Cohort-mean tables ``(len(rows), 2**d)`` for distinct rows."""
        if self.d > EXACT_LIMIT:
            raise LatticeTooLarge(f"d={self.d} exceeds the exact limit {EXACT_LIMIT}")
        rows = np.asarray(rows)
        size = 1 << self.d
        chunk = max(1, (1 << 22) // max(size, self.n_distinct))
        out = np.empty((len(rows), size))
        for s in range(0, len(rows), chunk):
            part = rows[s:s + chunk]
            out[s:s + chunk] = lattice_from_signatures(self.signatures(part), wsum, wrsum,
                                                       self.d)
        return out
