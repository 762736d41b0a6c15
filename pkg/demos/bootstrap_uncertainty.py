"""Bayesian bootstrap bands for group and individual cohort Shapley values."""

import numpy as np

from cohortshap import Group, SimilaritySpec, bootstrap_attributions, make_response, summarize
from cohortshap.compas import find_compas, load_compas
from cohortshap.datasets import synthetic_audit

ds = load_compas() if find_compas() else synthetic_audit()
spec = SimilaritySpec.exact(ds.d)
groups = {"Black": Group("Black", (("race", "Black"),)),
          "White": Group("White", (("race", "White"),))}
# one individual alongside the groups; individual bands are much wider
target = min(2999, ds.n - 1)
run = bootstrap_attributions(ds, spec, make_response(ds, "residual"), R=1000, seed=2024,
                             targets=[target], groups=groups)

print(f"{run.R} replicates, Exp(1) weights; minimum weight {run.weights.min():.2e}")
print(f"{'unit':<14} {'feature':<8} {'point':>8} {'2.5%':>8} {'97.5%':>8}")
for s in summarize(run):
    if s.feature in ("race", "sex"):
        print(f"{s.unit:<14} {s.feature:<8} {s.point:+8.4f} "
              f"{s.quantiles[0.025]:+8.4f} {s.quantiles[0.975]:+8.4f}")

widths = {u: np.ptp(np.quantile(reps[:, 0], [0.025, 0.975])) for u, reps, _ in run.units()}
print("95% band width for race:", {k: round(float(v), 4) for k, v in widths.items()})
