import textwrap

import pytest

from cohortshap.cohort import AbsWindow
from cohortshap.config import ConfigError, load_config

BASE = """\
[data]
path = table.csv

[columns]
g = feature categorical
x = feature continuous
y = response
yhat = response
"""


def _write(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(textwrap.dedent(text))
    return p


def test_minimal_config(tmp_path):
    cfg = load_config(_write(tmp_path, BASE + "[similarity]\nx = abs(0.5)\n[groups]\na = g=a\n"))
    assert cfg.data_path == tmp_path / "table.csv"
    assert cfg.similarity == {"x": AbsWindow(0.5)}
    assert cfg.response_kind == "residual" and cfg.mode == "auto"
    assert cfg.groups["a"].conditions == (("g", "a"),)
    assert len(cfg.digest) == 64


def test_negative_window_names_feature_and_line(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, BASE + "\n[similarity]\nx = abs(-0.5)\n"))
    assert "'x'" in str(e.value) and e.value.key == "similarity.x" and e.value.line == 11


@pytest.mark.parametrize("extra, key", [
    ("[attribution]\nmodde = exact\n", "attribution.modde"),
    ("[plots]\nx = 1\n", "plots"),
    ("[attribution]\nmode = fast\n", "attribution.mode"),
    ("[attribution]\nn_perms = 0\n", "attribution.n_perms"),
    ("[attribution]\nseed = abc\n", "attribution.seed"),
    ("[similarity]\ng = abs(1)\n", "similarity.g"),
    ("[similarity]\nz = exact\n", "similarity.z"),
    ("[response]\nkind = ratio\n", "response.kind"),
    ("[response]\nkind = threshold\ncolumn = y\n", "response.cutpoint"),
    ("[groups]\nbad = colour=red\n", "groups.bad"),
    ("[bootstrap]\nreplicates = 10\ngroups = nope\n", "bootstrap.groups"),
    ("[report]\nbin_width = 0\n", "report.bin_width"),
    ("[bootstrap]\nquantiles = 0.5, 1.5\n", "bootstrap.quantiles"),
])
def test_rejections_name_the_key(tmp_path, extra, key):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, BASE + extra))
    assert e.value.key == key
    assert key in str(e.value)


def test_bad_column_declaration(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, "[data]\npath = t.csv\n[columns]\ng = feature categorical bins(0, 1)\n"))
    assert e.value.key == "columns.g" and e.value.line == 4


def test_compas_format_fixed_schema(tmp_path):
    cfg = load_config(_write(tmp_path, "[data]\nformat = compas\npath = c.csv\n[groups]\nb = race=Black\n"))
    assert cfg.data_format == "compas"
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[data]\nformat = compas\n[similarity]\nage = abs(2)\n"))


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.ini")
