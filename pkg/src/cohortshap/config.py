"""Run configuration: an INI-style file with one section per pipeline stage.

Example::

    [data]
    path = defendants.csv

    [columns]
    race = feature categorical
    age = feature continuous bins(-inf, 25, 46, inf)
    income = feature continuous
    y = response
    yhat = response
    notes = ignore

    [similarity]
    income = rel(0.1)

    [response]
    kind = residual

    [groups]
    black_female = race=Black & sex=Female

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .bootstrap import parse_group
from .cohort import parse_rule
from .tabular import CATEGORICAL, CONTINUOUS, RESPONSE_KINDS, ColumnSpec


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = ""
        if key:
            where = f"[{key}]" if line is None else f"[{key}, line {line}]"
        super().__init__(f"config error {where}: {message}" if where else message)
        self.key = key
        self.line = line


ALLOWED = {
    "data": {"path", "format"},
    "columns": None,
    "similarity": None,
    "response": {"kind", "column", "y", "yhat", "cutpoint", "condition"},
    "attribution": {"mode", "n_perms", "seed", "targets", "threads"},
    "groups": None,
    "bootstrap": {"replicates", "seed", "targets", "quantiles", "groups"},
    "report": {"histogram_feature", "histogram_groups", "bin_width", "svg"},
    "sobol": {"grid", "samples", "seed"},
    "output": {"dir"},
}


@dataclass
class RunConfig:
    source: Path
    digest: str
    data_path: Path | None = None
    data_format: str = "csv"
    schema: dict = field(default_factory=dict)
    similarity: dict = field(default_factory=dict)
    response_kind: str = "residual"
    response_column: str | None = None
    y: str = "y"
    yhat: str = "yhat"
    cutpoint: float | None = None
    condition: object = None
    mode: str = "auto"
    n_perms: int = 1000
    seed: int = 0
    targets: list | None = None
    threads: int = 1
    groups: dict = field(default_factory=dict)
    bootstrap_replicates: int | None = None
    bootstrap_seed: int = 0
    bootstrap_targets: list = field(default_factory=list)
    bootstrap_groups: list | None = None
    quantiles: tuple = (0.025, 0.5, 0.975)
    histogram_feature: str | None = None
    histogram_groups: list | None = None
    bin_width: float = 0.01
    svg: bool = False
    sobol_grid: Path | None = None
    sobol_samples: int = 20000
    sobol_seed: int = 0
    out_dir: Path | None = None


_KEY_RE = re.compile(r"^\s*([^#;=:\s][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text):
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = no
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


_COLUMN_RE = re.compile(
    r"^(feature|response|ignore)(?:\s+(categorical|continuous))?"
    r"(?:\s+(bins|quantiles)\s*\((.*)\))?\s*$")


def _parse_column(text):
    m = _COLUMN_RE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse column declaration {text!r}")
    role, kind, binning, arg = m.groups()
    if role != "feature":
        if kind or binning:
            raise ValueError(f"{role} columns take no kind or binning")
        return ColumnSpec(role)
    kind = kind or CATEGORICAL
    if binning and kind != CONTINUOUS:
        raise ValueError("only continuous features can be binned")
    if binning == "bins":
        return ColumnSpec(role, kind, edges=tuple(float(x) for x in arg.split(",")))
    if binning == "quantiles":
        return ColumnSpec(role, kind, quantiles=int(arg))
    return ColumnSpec(role, kind)


def _int_list(text):
    text = text.strip()
    if text.lower() == "all":
        return None
    return [int(x) for x in re.split(r"[,\s]+", text) if x]


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    text = raw.decode("utf-8")
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0]) from None
    cfg = RunConfig(path, hashlib.sha256(raw).hexdigest())
    base = path.parent

    def fail(section, key, msg):
        line = lines.get((section, key.lower() if key else None))
        name = f"{section}.{key}" if key else section
        raise ConfigError(msg, name, line)

    for section in parser.sections():
        if section not in ALLOWED:
            fail(section, None, f"unknown section [{section}]")
        allowed = ALLOWED[section]
        if allowed is not None:
            for key in parser[section]:
                if key not in allowed:
                    fail(section, key, f"unknown key {key!r} in [{section}]")

    def get(section, key, conv=str, default=None):
        if not parser.has_option(section, key):
            return default
        value = parser[section][key]
        try:
            return conv(value)
        except (ValueError, TypeError) as e:
            fail(section, key, f"invalid value {value!r}: {e}")

    cfg.data_format = get("data", "format", str, "csv")
    if cfg.data_format not in ("csv", "compas"):
        fail("data", "format", "format must be csv or compas")
    p = get("data", "path")
    cfg.data_path = (base / p) if p else None

    if parser.has_section("columns"):
        if cfg.data_format == "compas":
            fail("columns", None, "the compas format has a fixed schema")
        for key, value in parser["columns"].items():
            try:
                cfg.schema[key] = _parse_column(value)
            except ValueError as e:
                fail("columns", key, str(e))
    if cfg.data_format == "csv" and parser.has_section("data") and not cfg.schema:
        fail("columns", None, "csv data needs a [columns] section")

    features = _feature_names(cfg)
    if parser.has_section("similarity"):
        for key, value in parser["similarity"].items():
            if features is not None and key not in features:
                fail("similarity", key, f"similarity rule for unknown feature {key!r}")
            try:
                cfg.similarity[key] = parse_rule(value)
            except ValueError as e:
                fail("similarity", key, f"feature {key!r}: {e}")
            if cfg.data_format == "compas" and value.strip() != "exact":
                fail("similarity", key, f"feature {key!r} is categorical in the compas format")
            if cfg.schema and cfg.schema[key].kind != CONTINUOUS and value.strip() != "exact":
                fail("similarity", key, f"feature {key!r} is not continuous")
            if cfg.schema and cfg.schema[key].kind == CONTINUOUS and (
                    cfg.schema[key].edges is not None or cfg.schema[key].quantiles is not None):
                if value.strip() != "exact":
                    fail("similarity", key, f"feature {key!r} is binned at load time")

    cfg.response_kind = get("response", "kind", str, "residual")
    if cfg.response_kind not in RESPONSE_KINDS:
        fail("response", "kind", f"kind must be one of {RESPONSE_KINDS}")
    cfg.response_column = get("response", "column")
    if cfg.response_kind in ("raw", "threshold") and not cfg.response_column:
        fail("response", "column", f"{cfg.response_kind} response needs a column")
    cfg.y = get("response", "y", str, "y")
    cfg.yhat = get("response", "yhat", str, "yhat")
    cfg.cutpoint = get("response", "cutpoint", float)
    if cfg.response_kind == "threshold" and cfg.cutpoint is None:
        fail("response", "cutpoint", "threshold response needs a cutpoint")
    cond = get("response", "condition")
    if cond:
        cfg.condition = get("response", "condition", lambda s: parse_group("condition", s))

    cfg.mode = get("attribution", "mode", str, "auto")
    if cfg.mode not in ("auto", "exact", "mc"):
        fail("attribution", "mode", "mode must be auto, exact or mc")
    cfg.n_perms = get("attribution", "n_perms", int, 1000)
    if cfg.n_perms < 1:
        fail("attribution", "n_perms", "n_perms must be positive")
    cfg.seed = get("attribution", "seed", int, 0)
    cfg.targets = get("attribution", "targets", _int_list, None)
    cfg.threads = get("attribution", "threads", int, 1)

    if parser.has_section("groups"):
        for key, value in parser["groups"].items():
            try:
                cfg.groups[key] = parse_group(key, value)
            except ValueError as e:
                fail("groups", key, str(e))
            if features is not None:
                for col, _ in cfg.groups[key].conditions:
                    if col not in features and col not in _response_names(cfg):
                        fail("groups", key, f"group {key!r} refers to unknown column {col!r}")

    if parser.has_section("bootstrap"):
        cfg.bootstrap_replicates = get("bootstrap", "replicates", int, 1000)
        if cfg.bootstrap_replicates < 1:
            fail("bootstrap", "replicates", "replicates must be positive")
        cfg.bootstrap_seed = get("bootstrap", "seed", int, 0)
        cfg.bootstrap_targets = get("bootstrap", "targets", _int_list, []) or []
        qs = get("bootstrap", "quantiles", lambda s: tuple(float(x) for x in s.split(",")))
        if qs is not None:
            if not all(0 <= q <= 1 for q in qs):
                fail("bootstrap", "quantiles", "quantiles must lie in [0, 1]")
            cfg.quantiles = qs
        names = get("bootstrap", "groups", lambda s: [x.strip() for x in s.split(",") if x.strip()])
        if names is not None:
            for g in names:
                if g not in cfg.groups:
                    fail("bootstrap", "groups", f"unknown group {g!r}")
        cfg.bootstrap_groups = names

    cfg.histogram_feature = get("report", "histogram_feature")
    if cfg.histogram_feature and features is not None and cfg.histogram_feature not in features:
        fail("report", "histogram_feature", f"unknown feature {cfg.histogram_feature!r}")
    cfg.histogram_groups = get("report", "histogram_groups",
                               lambda s: [x.strip() for x in s.split(",") if x.strip()])
    for g in cfg.histogram_groups or []:
        if g not in cfg.groups and (features is None or g not in features):
            fail("report", "histogram_groups", f"{g!r} is neither a group nor a feature")
    cfg.bin_width = get("report", "bin_width", float, 0.01)
    if not cfg.bin_width > 0:
        fail("report", "bin_width", "bin width must be positive")
    cfg.svg = get("report", "svg", _bool, False)

    g = get("sobol", "grid")
    cfg.sobol_grid = (base / g) if g else None
    cfg.sobol_samples = get("sobol", "samples", int, 20000)
    if cfg.sobol_samples < 2:
        fail("sobol", "samples", "need at least two samples")
    cfg.sobol_seed = get("sobol", "seed", int, 0)

    out = get("output", "dir")
    cfg.out_dir = (base / out) if out else None
    return cfg


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError("expected yes or no")


def _feature_names(cfg):
    if cfg.data_format == "compas":
        return ["race", "age", "priors", "charge", "sex"]
    if cfg.schema:
        return [k for k, c in cfg.schema.items() if c.role == "feature"]
    return None


def _response_names(cfg):
    if cfg.data_format == "compas":
        return ["y", "yhat", "decile"]
    return [k for k, c in cfg.schema.items() if c.role == "response"]
