"""Deterministic emission of attribution, group, bootstrap and Sobol' tables.

Machine-readable files write floats with 17 significant digits so that
every value round-trips exactly; rows are always in a fixed order, so the
same inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__


def fmt(x):
    """17-significant-digit text for floats; empty for None."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


ATTRIBUTION_FIELDS = ["target_id", "feature", "phi", "nu_empty", "nu_full", "method",
                      "n_perms", "seed", "stderr"]


def attribution_csv(attributions):
    rows = [[rec[k] for k in ATTRIBUTION_FIELDS]
            for a in attributions for rec in a.records()]
    return _csv_text(ATTRIBUTION_FIELDS, rows)


def attribution_jsonl(attributions):
    lines = []
    for a in attributions:
        for rec in a.records():
            rec = {k: (_json_float(v) if isinstance(v, float) else v) for k, v in rec.items()}
            lines.append(json.dumps(rec, sort_keys=False))
    return "\n".join(lines) + "\n"


def group_csv(aggregates):
    rows = []
    for g in aggregates:
        for name, v in zip(g.feature_names, g.phi):
            rows.append([g.name, name, g.count, float(v)])
    return _csv_text(["group", "feature", "count", "phi"], rows)


def group_table(aggregates, digits=4):
    """Human-readable features x groups table."""
    if not aggregates:
        return ""
    names = aggregates[0].feature_names
    width = max(len(n) for n in names + ["feature"])
    cols = [max(len(g.name), digits + 4) for g in aggregates]
    head = "feature".ljust(width) + "  " + "  ".join(
        g.name.rjust(c) for g, c in zip(aggregates, cols))
    lines = [head]
    for j, n in enumerate(names):
        cells = [f"{g.phi[j]:+.{digits}f}".rjust(c) for g, c in zip(aggregates, cols)]
        lines.append(n.ljust(width) + "  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def bootstrap_csv(summaries, quantiles):
    header = ["unit", "feature", "point", "mean", "sd"] + [f"q{q:g}" for q in quantiles]
    rows = [[s.unit, s.feature, s.point, s.mean, s.sd] + [s.quantiles[float(q)] for q in quantiles]
            for s in summaries]
    return _csv_text(header, rows)


def violin_json(summaries):
    out = {}
    for s in summaries:
        values, density = s.violin
        out.setdefault(s.unit, {})[s.feature] = {
            "value": [_json_float(v) for v in values],
            "density": [_json_float(v) for v in density],
        }
    return json.dumps(out, indent=1) + "\n"


# ------------------------------------------------------------------ histograms


@dataclass
class Histogram:
    """Fixed-width bins ``[k w, (k+1) w)`` aligned at zero.

    ``counts[group]`` is aligned with ``bins`` (the integers ``k``).
    """

    feature: str
    bin_width: float
    bins: np.ndarray
    counts: dict

    def edges(self):
        return self.bins * self.bin_width, (self.bins + 1) * self.bin_width

    def to_csv(self):
        lo, hi = self.edges()
        rows = [[self.feature, g, a, b, int(c)]
                for g, cs in self.counts.items() for a, b, c in zip(lo, hi, cs)]
        return _csv_text(["feature", "group", "bin_left", "bin_right", "count"], rows)

    def to_svg(self, width=640, height=360):
        return _histogram_svg(self, width, height)


def emit_histogram(attributions, feature, grouping=None, bin_width=0.01) -> Histogram:
    """Bin one feature's attributions, separately per group.

    ``grouping`` maps group name to a boolean mask (or positions) aligned
    with ``attributions``; None puts everything in one group ``all``.
    """
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    if not attributions:
        raise ValueError("need at least one attribution")
    names = attributions[0].feature_names
    j = names.index(feature) if isinstance(feature, str) else int(feature)
    phi = np.array([a.phi[j] for a in attributions])
    k = np.floor(phi / bin_width).astype(np.int64)
    bins = np.arange(k.min(), k.max() + 1)
    grouping = {"all": np.ones(len(phi), dtype=bool)} if grouping is None else grouping
    counts = {}
    for g, m in grouping.items():
        m = np.asarray(m)
        sel = k[m] if m.dtype == bool else k[m.astype(np.int64)]
        counts[g] = np.bincount(sel - bins[0], minlength=len(bins))
    return Histogram(names[j] if names else str(j), float(bin_width), bins, counts)


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f"]


def _histogram_svg(h, width, height):
    ml, mr, mt, mb = 50, 20, 30, 40
    lo, hi = h.edges()
    x0, x1 = float(lo[0]), float(hi[-1])
    ymax = max(int(c.max()) for c in h.counts.values()) or 1
    sx = (width - ml - mr) / (x1 - x0)
    sy = (height - mt - mb) / ymax

    def X(v):
        return ml + (v - x0) * sx

    def Y(v):
        return height - mb - v * sy

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">'
             f'cohort Shapley value of {h.feature}</text>',
             f'<line x1="{ml}" y1="{Y(0):.2f}" x2="{width - mr}" y2="{Y(0):.2f}" stroke="black"/>',
             f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{Y(0):.2f}" stroke="black"/>']
    if x0 <= 0 <= x1:
        parts.append(f'<line x1="{X(0):.2f}" y1="{mt}" x2="{X(0):.2f}" y2="{Y(0):.2f}" '
                     'stroke="grey" stroke-dasharray="4,3"/>')
    for i, (g, cs) in enumerate(h.counts.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = [f"{X(x0):.2f},{Y(0):.2f}"]
        for a, b, c in zip(lo, hi, cs):
            pts += [f"{X(a):.2f},{Y(c):.2f}", f"{X(b):.2f},{Y(c):.2f}"]
        pts.append(f"{X(x1):.2f},{Y(0):.2f}")
        parts.append(f'<polyline points="{" ".join(pts)}" fill="{color}" fill-opacity="0.3" '
                     f'stroke="{color}"/>')
        parts.append(f'<text x="{width - mr - 5}" y="{mt + 14 * (i + 1)}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{g}</text>')
    parts.append(f'<text x="{ml}" y="{height - 10}" font-size="11">{x0:.4g}</text>')
    parts.append(f'<text x="{width - mr}" y="{height - 10}" text-anchor="end" '
                 f'font-size="11">{x1:.4g}</text>')
    parts.append(f'<text x="{ml - 5}" y="{mt + 4}" text-anchor="end" font-size="11">{ymax}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ------------------------------------------------------------------ sobol table


def sobol_csv(vc, effects, names=None):
    from .sobol import sobol_closed, sobol_total

    names = names or [f"x{j + 1}" for j in range(vc.d)]
    rows = [[names[j], sobol_closed(vc, 1 << j), sobol_total(vc, 1 << j), effects[j],
             vc.sigma2[1 << j]] for j in range(vc.d)]
    head = _csv_text(["feature", "closed", "total", "shapley_effect", "main_effect_variance"],
                     rows)
    return head


def sobol_estimates_csv(rows):
    return _csv_text(["feature", "estimator", "estimate", "stderr", "n"], rows)


# ------------------------------------------------------------------ manifest


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(cfg, command, overrides, outputs, extra=None):
    import scipy

    m = {
        "command": command,
        "config": str(cfg.source.name),
        "config_sha256": cfg.digest,
        "data": None if cfg.data_path is None else str(cfg.data_path.name),
        "data_sha256": (sha256_file(cfg.data_path)
                        if cfg.data_path is not None and cfg.data_path.is_file() else None),
        "overrides": overrides,
        "seeds": {"attribution": cfg.seed, "bootstrap": cfg.bootstrap_seed,
                  "sobol": cfg.sobol_seed},
        "versions": {"cohortshap": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "outputs": sorted(outputs),
    }
    if extra:
        m.update(extra)
    return json.dumps(m, indent=1, sort_keys=True) + "\n"


def write(out_dir: Path, name, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")
    return name
