"""Command-line front end.

One config file drives every stage::

    cohortshap attribute --config audit.ini --out results/
    cohortshap aggregate --config audit.ini
    cohortshap bootstrap --config audit.ini --seed 7
    cohortshap sobol     --config grid.ini
    cohortshap report    --config audit.ini

Exit status: 0 on success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report
from .bootstrap import aggregate_groups, bootstrap_attributions, summarize
from .cohort import SimilaritySpec
from .config import ConfigError, RunConfig, load_config
from .shapley import all_targets
from .sobol import (anova, jansen_total, pick_freeze_closed, read_grid_csv, shapley_effects,
                    sobol_closed, sobol_total)
from .tabular import DataError, Dataset, ResponseVector, load_table, make_response

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


@dataclass
class Prepared:
    cfg: RunConfig
    ds: Dataset
    spec: SimilaritySpec
    response: ResponseVector

    def positions(self, ids):
        """Row positions of original 0-based row ids; None means every row."""
        if ids is None:
            return np.arange(self.ds.n)
        where = {int(i): p for p, i in enumerate(self.ds.index)}
        missing = [i for i in ids if i not in where]
        if missing:
            raise DataError(f"targets {missing} are not rows of the (conditioned) data")
        return np.array([where[i] for i in ids], dtype=np.int64)


def prepare(cfg: RunConfig) -> Prepared:
    """Ingest, condition, build the response and the similarity spec."""
    if cfg.data_path is None:
        raise ConfigError("no data path", "data.path")
    if cfg.data_format == "compas":
        from .compas import load_compas
        ds = load_compas(cfg.data_path)
    else:
        if not cfg.data_path.is_file():
            raise DataError(f"data file {cfg.data_path} not found")
        ds = load_table(cfg.data_path, cfg.schema)
    resp = make_response(ds, cfg.response_kind, name=cfg.response_column, y=cfg.y,
                         yhat=cfg.yhat, cutpoint=cfg.cutpoint)
    if cfg.condition is not None:
        keep = cfg.condition.mask(ds)
        if not keep.any():
            raise DataError("response.condition selects no rows")
        resp = ResponseVector(resp.name, resp.values[keep], resp.kind)
        ds = ds.subset(keep)
    try:
        spec = SimilaritySpec.for_dataset(ds, cfg.similarity)
    except ValueError as e:
        raise ConfigError(str(e), "similarity") from None
    return Prepared(cfg, ds, spec, resp)


# ------------------------------------------------------------------ stages


def _attribute(p: Prepared, targets=None):
    c = p.cfg
    return all_targets(p.ds, p.spec, p.response, mode=c.mode, n_perms=c.n_perms, seed=c.seed,
                       targets=targets, threads=c.threads)


def stage_attribute(p: Prepared, out: dict):
    atts = _attribute(p, p.positions(p.cfg.targets))
    out["attributions.csv"] = report.attribution_csv(atts)
    out["attributions.jsonl"] = report.attribution_jsonl(atts)
    return atts


def _groups(p: Prepared, names=None):
    groups = p.cfg.groups
    if names is not None:
        groups = {k: groups[k] for k in names}
    return groups or {"all": np.ones(p.ds.n, dtype=bool)}


def stage_aggregate(p: Prepared, out: dict, atts=None):
    if atts is None or len(atts) != p.ds.n:
        atts = _attribute(p)
    aggs = aggregate_groups(atts, _groups(p), p.ds)
    out["groups.csv"] = report.group_csv(aggs)
    print(f"mean attribution of {p.response.name} by group")
    print(report.group_table(aggs), end="")
    return atts


def stage_bootstrap(p: Prepared, out: dict):
    c = p.cfg
    if c.bootstrap_replicates is None:
        raise ConfigError("bootstrap needs a [bootstrap] section", "bootstrap")
    groups = _groups(p, c.bootstrap_groups)
    run = bootstrap_attributions(p.ds, p.spec, p.response, R=c.bootstrap_replicates,
                                 seed=c.bootstrap_seed,
                                 targets=p.positions(c.bootstrap_targets), groups=groups,
                                 mode=c.mode, n_perms=c.n_perms, mc_seed=c.seed)
    summ = summarize(run, c.quantiles)
    out["bootstrap_summary.csv"] = report.bootstrap_csv(summ, c.quantiles)
    out["violins.json"] = report.violin_json(summ)
    lo, hi = min(c.quantiles), max(c.quantiles)
    print(f"bootstrap R={run.R}: point estimate [q{lo:g}, q{hi:g}]")
    for s in summ:
        print(f"  {s.unit:<24} {s.feature:<12} {s.point:+.4f} "
              f"[{s.quantiles[lo]:+.4f}, {s.quantiles[hi]:+.4f}]")
    return run


def _histogram_grouping(p: Prepared):
    names = p.cfg.histogram_groups
    if not names:
        return None
    grouping = {}
    for g in names:
        if g in p.cfg.groups:
            grouping[g] = p.cfg.groups[g].mask(p.ds)
        else:
            f = p.ds.feature(g)
            if not f.is_categorical:
                raise ConfigError(f"cannot group a histogram by continuous {g!r}",
                                  "report.histogram_groups")
            for k, label in enumerate(f.levels):
                grouping[f"{g}={label}"] = f.values == k
    return grouping


def stage_histogram(p: Prepared, out: dict, atts):
    c = p.cfg
    feature = c.histogram_feature or p.ds.feature_names[0]
    h = report.emit_histogram(atts, feature, _histogram_grouping(p), c.bin_width)
    out[f"histogram_{feature}.csv"] = h.to_csv()
    if c.svg:
        out[f"histogram_{feature}.svg"] = h.to_svg()


def stage_sobol(p_cfg: RunConfig, out: dict):
    c = p_cfg
    if c.sobol_grid is None:
        raise ConfigError("sobol needs [sobol] grid", "sobol.grid")
    if not c.sobol_grid.is_file():
        raise DataError(f"grid file {c.sobol_grid} not found")
    try:
        grid = read_grid_csv(c.sobol_grid)
    except ValueError as e:
        raise DataError(f"{c.sobol_grid.name}: {e}") from None
    with open(c.sobol_grid, encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")[:grid.d]
    vc = anova(grid)
    eff = shapley_effects(vc)
    out["sobol.csv"] = report.sobol_csv(vc, eff, names)
    f, sampler = grid.function(), grid.sampler()
    rows = []
    for j, name in enumerate(names):
        for est, fn in (("pick_freeze_closed", pick_freeze_closed), ("jansen_total", jansen_total)):
            e = fn(f, sampler, 1 << j, c.sobol_samples, c.sobol_seed)
            rows.append([name, est, e.estimate, e.stderr, e.n])
    out["sobol_estimates.csv"] = report.sobol_estimates_csv(rows)
    print(f"variance {vc.variance:.4f}")
    print(f"{'feature':<12} {'closed':>8} {'total':>8} {'shapley':>8}")
    for j, name in enumerate(names):
        print(f"{name:<12} {sobol_closed(vc, 1 << j):8.4f} {sobol_total(vc, 1 << j):8.4f} "
              f"{eff[j]:8.4f}")


# ------------------------------------------------------------------ driver


def _run(command, cfg, overrides):
    out = {}
    if command == "sobol":
        stage_sobol(cfg, out)
    else:
        p = prepare(cfg)
        if command == "attribute":
            stage_attribute(p, out)
        elif command == "aggregate":
            stage_aggregate(p, out)
        elif command == "bootstrap":
            stage_bootstrap(p, out)
        elif command == "report":
            atts = stage_attribute(p, out)
            atts = stage_aggregate(p, out, atts)
            stage_histogram(p, out, atts)
            if cfg.bootstrap_replicates is not None:
                stage_bootstrap(p, out)
            if cfg.sobol_grid is not None:
                stage_sobol(cfg, out)
    out_dir = cfg.out_dir
    for name in sorted(out):
        report.write(out_dir, name, out[name])
    mname = f"manifest_{command}.json"
    report.write(out_dir, mname, report.manifest(cfg, command, overrides, list(out)))
    print(f"wrote {len(out) + 1} files to {out_dir}")


def build_parser():
    parser = argparse.ArgumentParser(prog="cohortshap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "attribute": "cohort Shapley values for the configured targets",
        "aggregate": "per-group mean attributions over all rows",
        "bootstrap": "Bayesian bootstrap summaries for targets and groups",
        "sobol": "ANOVA, Sobol' indices and Shapley effects of a grid function",
        "report": "every configured stage plus histograms",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, type=Path, metavar="PATH")
        s.add_argument("--out", type=Path, metavar="DIR", help="output directory")
        s.add_argument("--seed", type=int, help="override every configured seed")
        s.add_argument("--threads", type=int)
        s.add_argument("--mode", choices=("exact", "mc"))
        s.add_argument("--n-perms", type=int, dest="n_perms")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: (str(v) if isinstance(v, Path) else v)
                 for k in ("out", "seed", "threads", "mode", "n_perms")
                 if (v := getattr(args, k)) is not None}
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = args.out
        if cfg.out_dir is None:
            raise ConfigError("no output directory; set [output] dir or pass --out", "output.dir")
        if args.seed is not None:
            cfg.seed = cfg.bootstrap_seed = cfg.sobol_seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be positive", "threads")
            cfg.threads = args.threads
        if args.mode is not None:
            cfg.mode = args.mode
        if args.n_perms is not None:
            if args.n_perms < 1:
                raise ConfigError("--n-perms must be positive", "n_perms")
            cfg.n_perms = args.n_perms
        _run(args.command, cfg, overrides)
    except ConfigError as e:
        print(f"cohortshap: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as e:
        print(f"cohortshap: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
