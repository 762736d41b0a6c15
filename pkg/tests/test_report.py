import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cohortshap import report
from cohortshap.cohort import SimilaritySpec
from cohortshap.datasets import running_example
from cohortshap.shapley import ShapleyAttribution, all_targets, mc_shapley, TableOracle


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_exactly(x):
    assert float(report.fmt(x)) == x


def test_attribution_tables():
    ds = running_example()
    atts = all_targets(ds, SimilaritySpec.exact(3), ds.response("f1"), targets=[0, 5])
    rows = list(csv.DictReader(io.StringIO(report.attribution_csv(atts))))
    assert len(rows) == 6
    assert rows[0]["target_id"] == "0" and rows[0]["feature"] == "x1"
    assert float(rows[1]["phi"]) == atts[0].phi[1]
    lines = report.attribution_jsonl(atts).splitlines()
    rec = json.loads(lines[4])
    assert rec["target_id"] == 5 and rec["feature"] == "x2" and rec["stderr"] is None
    assert rec["phi"] == atts[1].phi[1]


def test_mc_record_carries_stderr():
    a = mc_shapley(TableOracle(np.arange(8.0)), 50, seed=2)
    rec = json.loads(report.attribution_jsonl([a]).splitlines()[0])
    assert rec["method"] == "mc" and rec["n_perms"] == 50 and rec["seed"] == 2
    assert rec["stderr"] == a.stderr[0]


def _att(phi):
    return ShapleyAttribution(np.array(phi, float), 0.0, float(sum(phi)), feature_names=["a", "b"])


def test_histogram_aligned_at_zero():
    atts = [_att([x, 0]) for x in (-0.15, -0.05, 0.0, 0.049, 0.05, 0.21)]
    h = report.emit_histogram(atts, "a", bin_width=0.1)
    np.testing.assert_array_equal(h.bins, [-2, -1, 0, 1, 2])
    np.testing.assert_array_equal(h.counts["all"], [1, 1, 3, 0, 1])
    g = report.emit_histogram(atts, "a", {"neg": [0, 1], "pos": np.array([0, 0, 1, 1, 1, 1], bool)},
                              bin_width=0.1)
    assert g.counts["neg"].sum() == 2 and g.counts["pos"].sum() == 4
    svg = g.to_svg()
    assert svg.startswith("<svg") and "neg" in svg and "pos" in svg


def test_histogram_single_and_errors():
    h = report.emit_histogram([_att([0.3, 0])], "a", bin_width=0.25)
    assert h.counts["all"].tolist() == [1]
    with pytest.raises(ValueError):
        report.emit_histogram([_att([0.3, 0])], "a", bin_width=0)
    with pytest.raises(ValueError):
        report.emit_histogram([], "a")


def test_group_table_is_human_readable():
    from cohortshap.bootstrap import GroupAggregate

    txt = report.group_table([GroupAggregate("W", np.array([0.05412, -0.0011]), 3, ["race", "sex"])])
    assert "+0.0541" in txt and "-0.0011" in txt
