"""COMPAS checks; skipped when the public export is not available locally."""

import numpy as np
import pytest

from cohortshap.bootstrap import Group, aggregate_groups, conditional_attribution
from cohortshap.cohort import SimilaritySpec
from cohortshap.compas import find_compas, load_compas
from cohortshap.shapley import all_targets
from cohortshap.tabular import make_response

pytestmark = pytest.mark.skipif(find_compas() is None,
                                reason="compas-scores-two-years.csv not found")


@pytest.fixture(scope="module")
def ds():
    return load_compas()


def test_preprocessing(ds):
    assert ds.n == 5278
    assert ds.feature_names == ["race", "age", "priors", "charge", "sex"]
    assert ds.feature("priors").levels == ("0", "1-3", "4-6", "7-10", ">10")
    assert set(np.unique(ds.response("yhat"))) == {0.0, 1.0}


def test_yhat_race_impacts_separate(ds):
    atts = all_targets(ds, SimilaritySpec.exact(ds.d), make_response(ds, "raw", name="yhat"))
    race = np.array([a.phi[0] for a in atts])
    black = ds.feature("race").values == 0
    assert (race[black] > 0).all() and (race[~black] < 0).all()
    male = ds.feature("sex").values == ds.feature("sex").levels.index("Male")
    # bimodality is larger in absolute value for male defendants
    assert np.abs(race[male]).mean() > np.abs(race[~male]).mean()


def test_fpr_view_separates(ds):
    atts = conditional_attribution(ds, SimilaritySpec.exact(ds.d), Group("y0", (("y", "0"),)),
                                   make_response(ds, "raw", name="yhat"))
    race = np.array([a.phi[0] for a in atts])
    black = ds.feature("race").values[ds.response("y") == 0] == 0
    assert race[black].min() > race[~black].max()


def test_residual_group_means_are_additive(ds):
    spec = SimilaritySpec.exact(ds.d)
    groups = {"B": Group("B", (("race", "Black"),)), "W": Group("W", (("race", "White"),))}
    res = aggregate_groups(all_targets(ds, spec, make_response(ds, "residual")), groups, ds)
    y = aggregate_groups(all_targets(ds, spec, make_response(ds, "raw", name="y")), groups, ds)
    yh = aggregate_groups(all_targets(ds, spec, make_response(ds, "raw", name="yhat")), groups, ds)
    for a, b, c in zip(res, y, yh):
        np.testing.assert_allclose(a.phi, b.phi - c.phi, atol=1e-12)
