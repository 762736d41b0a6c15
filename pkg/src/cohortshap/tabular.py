"""Dataset model, CSV ingestion, binning, responses and confusion counts.

A :class:`Dataset` holds ``n`` observed rows of ``d`` feature columns plus
named real response columns.  It is immutable once built: every array is
flagged read-only, and derived datasets (row subsets, added responses) are
new objects.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

MISSING = "missing"
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureColumn:
    """One predictor column.

    Categorical columns hold dense integer codes ``0..K-1`` with ``levels``
    giving the label of each code.  Continuous columns hold floats, with
    ``nan`` as the missing marker.
    """

    name: str
    kind: str
    values: np.ndarray
    levels: tuple = ()

    def __post_init__(self):
        if self.kind == CATEGORICAL:
            v = _frozen(self.values, np.int64)
            k = len(self.levels)
            if v.size and (v.min() < 0 or v.max() >= k):
                raise DataError(f"column {self.name!r}: codes outside 0..{k - 1}")
        elif self.kind == CONTINUOUS:
            v = _frozen(self.values, np.float64)
            if np.isinf(v).any():
                raise DataError(f"column {self.name!r}: infinite values")
        else:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if v.ndim != 1:
            raise DataError(f"column {self.name!r}: values must be 1-D")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "levels", tuple(str(s) for s in self.levels))

    def __len__(self):
        return len(self.values)

    @property
    def is_categorical(self):
        return self.kind == CATEGORICAL

    def labels(self):
        """Per-row label strings (categorical) or formatted numbers."""
        if self.is_categorical:
            lv = np.array(self.levels, dtype=object)
            return lv[self.values]
        return np.array([MISSING if math.isnan(x) else repr(x) for x in self.values],
                        dtype=object)

    def take(self, rows):
        return FeatureColumn(self.name, self.kind, self.values[rows], self.levels)

    @classmethod
    def categorical(cls, name, labels):
        """Encode raw labels with codes in order of first appearance."""
        codes, levels = _encode_first_appearance(labels)
        return cls(name, CATEGORICAL, codes, levels)


def _encode_first_appearance(labels):
    index = {}
    codes = np.empty(len(labels), dtype=np.int64)
    for i, s in enumerate(labels):
        s = MISSING if s is None or (isinstance(s, float) and math.isnan(s)) else str(s)
        codes[i] = index.setdefault(s, len(index))
    return codes, tuple(index)


@dataclass(frozen=True)
class Dataset:
    features: tuple
    responses: Mapping[str, np.ndarray] = field(default_factory=dict)
    index: np.ndarray | None = None

    def __post_init__(self):
        feats = tuple(self.features)
        if not feats:
            raise DataError("dataset needs at least one feature column")
        n = len(feats[0])
        if n < 1:
            raise DataError("dataset is empty")
        resp = {}
        for name, vals in self.responses.items():
            resp[str(name)] = _frozen(vals, np.float64)
        names = [f.name for f in feats] + list(resp)
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in {names}")
        for col in list(feats) + [v for v in resp.values()]:
            if len(col) != n:
                raise DataError("all columns must share the same length")
        idx = np.arange(n) if self.index is None else self.index
        idx = _frozen(idx, np.int64)
        if idx.shape != (n,):
            raise DataError("index length must equal n")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "responses", MappingProxyType(resp))
        object.__setattr__(self, "index", idx)

    @property
    def n(self):
        return len(self.features[0])

    @property
    def d(self):
        return len(self.features)

    @property
    def feature_names(self):
        return [f.name for f in self.features]

    def feature(self, name):
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def feature_index(self, name):
        return self.feature_names.index(name)

    def response(self, name):
        try:
            return self.responses[name]
        except KeyError:
            raise DataError(f"no response column {name!r}") from None

    def with_response(self, name, values):
        resp = dict(self.responses)
        resp[name] = values
        return Dataset(self.features, resp, self.index)

    def subset(self, rows):
        """Dataset restricted to ``rows`` (boolean mask or positions)."""
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        if rows.size == 0:
            raise DataError("row selection is empty")
        return Dataset(tuple(f.take(rows) for f in self.features),
                       {k: v[rows] for k, v in self.responses.items()},
                       self.index[rows])


# ---------------------------------------------------------------- schema / CSV


@dataclass(frozen=True)
class ColumnSpec:
    """How to treat one CSV column.

    ``role`` is ``feature``, ``response`` or ``ignore``.  For continuous
    features ``edges`` or ``quantiles`` requests binning at load time.
    """

    role: str
    kind: str = CATEGORICAL
    edges: tuple | None = None
    quantiles: int | None = None


def load_table(source, schema: Mapping[str, ColumnSpec]) -> Dataset:
    """Parse delimiter-separated text with a header row into a Dataset.

    ``source`` is a path, bytes, or a binary/text file object.  Columns not
    named in ``schema`` are ignored; schema columns missing from the header
    are an error.  Feature order follows the schema.
    """
    text = _read_text(source)
    rows = list(csv.reader(io.StringIO(text)))
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise DataError("empty table: no header row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError("empty table: header but no data rows")
    seen = set()
    for h in header:
        if h in seen:
            raise DataError(f"duplicate column name {h!r}")
        seen.add(h)
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"ragged row at line {lineno}: {len(row)} cells, "
                            f"header has {len(header)}")
    features, responses = [], {}
    for name, spec in schema.items():
        if spec.role == "ignore":
            continue
        if name not in header:
            raise DataError(f"column {name!r} declared in schema but absent from header")
        j = header.index(name)
        cells = [row[j].strip() for row in body]
        if spec.role == "response":
            responses[name] = _parse_numeric(name, cells)
        elif spec.role == "feature":
            if spec.kind == CATEGORICAL:
                labels = [MISSING if c.lower() in MISSING_TOKENS else c for c in cells]
                features.append(FeatureColumn.categorical(name, labels))
            elif spec.kind == CONTINUOUS:
                col = FeatureColumn(name, CONTINUOUS, _parse_numeric(name, cells))
                if spec.edges is not None or spec.quantiles is not None:
                    col = bin_continuous(col, edges=spec.edges, quantile_count=spec.quantiles)
                features.append(col)
            else:
                raise DataError(f"column {name!r}: unknown kind {spec.kind!r}")
        else:
            raise DataError(f"column {name!r}: unknown role {spec.role!r}")
    return Dataset(tuple(features), responses)


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return data


def _parse_numeric(name, cells):
    out = np.empty(len(cells))
    for i, c in enumerate(cells):
        if c.lower() in MISSING_TOKENS:
            out[i] = np.nan
            continue
        try:
            out[i] = float(c)
        except ValueError:
            raise DataError(f"column {name!r}, data row {i + 1}: "
                            f"cannot parse {c!r} as a number") from None
        if not math.isfinite(out[i]):
            raise DataError(f"column {name!r}, data row {i + 1}: non-finite value {c!r}")
    return out


# ---------------------------------------------------------------------- binning


def bin_index(values, edges):
    """Bin positions for ``values`` under intervals ``[e_m, e_{m+1})``.

    The last interval is closed on the right.  Values below ``edges[0]`` get
    ``-1`` and values above ``edges[-1]`` get ``len(edges) - 1``; nan gets -2.
    Edges may repeat (quantile mode), in which case the repeated intervals
    are empty.
    """
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    k = len(edges) - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == edges[-1], k - 1, idx)
    idx = np.where(values > edges[-1], k, idx)
    return np.where(np.isnan(values), -2, idx)


def _format_edge(e):
    if math.isinf(e):
        return "inf" if e > 0 else "-inf"
    return f"{e:g}"


def bin_continuous(col: FeatureColumn, edges=None, quantile_count=None) -> FeatureColumn:
    """Turn a continuous column into a categorical one by interval binning.

    Give either strictly ascending ``edges`` (``len(edges) - 1`` levels, values
    outside ``[edges[0], edges[-1]]`` are an error) or ``quantile_count`` k in
    2..50, in which case edges are empirical quantiles and some of the k
    levels may be empty.  Missing values get an extra trailing level.
    """
    if col.kind != CONTINUOUS:
        raise DataError(f"column {col.name!r} is not continuous")
    x = col.values
    present = ~np.isnan(x)
    if not present.any():
        raise DataError(f"column {col.name!r} has no non-missing values")
    if (edges is None) == (quantile_count is None):
        raise ValueError("give exactly one of edges or quantile_count")
    if edges is not None:
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.isnan(edges).any():
            raise ValueError("edges must be a list of at least two numbers")
        if not np.all(np.diff(edges) > 0):
            raise ValueError(f"bin edges for {col.name!r} must be strictly ascending")
    else:
        k = int(quantile_count)
        if not 2 <= k <= 50:
            raise ValueError("quantile_count must be in 2..50")
        edges = np.quantile(x[present], np.linspace(0.0, 1.0, k + 1))
    k = len(edges) - 1
    idx = bin_index(x, edges)
    bad = present & ((idx < 0) | (idx >= k))
    if bad.any():
        v = x[np.flatnonzero(bad)[0]]
        raise DataError(f"column {col.name!r}: value {v!r} outside bin range "
                        f"[{edges[0]}, {edges[-1]}]")
    levels = [
        f"[{_format_edge(edges[m])}, {_format_edge(edges[m + 1])}{']' if m == k - 1 else ')'}"
        for m in range(k)
    ]
    if not present.all():
        levels.append(MISSING)
        idx = np.where(present, idx, k)
    return FeatureColumn(col.name, CATEGORICAL, idx, tuple(levels))


# -------------------------------------------------------------------- responses


RESPONSE_KINDS = ("raw", "residual", "fp", "fn", "threshold")


@dataclass(frozen=True)
class ResponseVector:
    name: str
    values: np.ndarray
    kind: str = "raw"

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))

    def __len__(self):
        return len(self.values)


def _binary(ds, name):
    v = ds.response(name)
    if not np.isin(v, (0.0, 1.0)).all():
        raise DataError(f"response {name!r} is not binary 0/1")
    return v


def make_response(ds: Dataset, kind: str, name=None, y="y", yhat="yhat",
                  cutpoint=None) -> ResponseVector:
    """Build the response vector to attribute.

    ``raw`` and ``threshold`` read column ``name``; ``residual`` gives
    ``y - yhat``; ``fp`` and ``fn`` are the false positive / false negative
    indicators ``1{y=0, yhat=1}`` and ``1{y=1, yhat=0}``.  ``threshold`` maps
    a score to ``1{score >= cutpoint}``.
    """
    if kind == "raw":
        return ResponseVector(name, ds.response(name), "raw")
    if kind == "residual":
        return ResponseVector(f"{y}-{yhat}", ds.response(y) - ds.response(yhat), "residual")
    if kind in ("fp", "fn"):
        yv, hv = _binary(ds, y), _binary(ds, yhat)
        if kind == "fp":
            vals = (yv == 0) & (hv == 1)
        else:
            vals = (yv == 1) & (hv == 0)
        return ResponseVector(kind.upper(), vals.astype(float), f"{kind}-indicator")
    if kind == "threshold":
        if cutpoint is None:
            raise ValueError("threshold response needs a cutpoint")
        score = ds.response(name)
        return ResponseVector(f"{name}>={cutpoint:g}", (score >= cutpoint).astype(float),
                              "raw")
    raise ValueError(f"unknown response kind {kind!r}; expected one of {RESPONSE_KINDS}")


# -------------------------------------------------------------------- confusion


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts ``n_{y yhat}``; derived rates are ``None`` when undefined."""

    n00: int
    n01: int
    n10: int
    n11: int

    @property
    def total(self):
        return self.n00 + self.n01 + self.n10 + self.n11

    @staticmethod
    def _ratio(a, b):
        return a / b if b > 0 else None

    @property
    def fpr(self):
        return self._ratio(self.n01, self.n00 + self.n01)

    @property
    def fnr(self):
        return self._ratio(self.n10, self.n10 + self.n11)

    @property
    def ppv(self):
        return self._ratio(self.n11, self.n01 + self.n11)

    @property
    def prevalence(self):
        return self._ratio(self.n10 + self.n11, self.total)

    def fpr_from_identity(self):
        """FPR recovered from prevalence, PPV and FNR; None if undefined."""
        p, ppv, fnr = self.prevalence, self.ppv, self.fnr
        if p is None or ppv is None or fnr is None or p == 1 or ppv == 0:
            return None
        return p / (1 - p) * (1 - ppv) / ppv * (1 - fnr)

    def as_dict(self):
        return {"n00": self.n00, "n01": self.n01, "n10": self.n10, "n11": self.n11,
                "fpr": self.fpr, "fnr": self.fnr, "ppv": self.ppv,
                "prevalence": self.prevalence}


def confusion(y, yhat, subset=None) -> ConfusionCounts:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise DataError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if subset is not None:
        subset = np.asarray(subset)
        y, yhat = y[subset], yhat[subset]
        if y.size == 0:
            raise DataError("subset is empty")
    if not (np.isin(y, (0, 1)).all() and np.isin(yhat, (0, 1)).all()):
        raise DataError("confusion counts need binary 0/1 vectors")
    yb, hb = y.astype(bool), yhat.astype(bool)
    return ConfusionCounts(int(np.sum(~yb & ~hb)), int(np.sum(~yb & hb)),
                           int(np.sum(yb & ~hb)), int(np.sum(yb & hb)))

