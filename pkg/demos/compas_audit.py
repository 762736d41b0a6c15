"""Fairness audit of the COMPAS recidivism score with cohort Shapley.

Requires ``compas-scores-two-years.csv`` (ProPublica) in ./data/ or at
$COHORTSHAP_COMPAS.  Without it, a synthetic table with a planted race
effect stands in.
"""

import numpy as np

from cohortshap import Group, SimilaritySpec, aggregate_groups, all_targets, make_response
from cohortshap.bootstrap import conditional_attribution
from cohortshap.compas import find_compas, load_compas
from cohortshap.datasets import synthetic_audit
from cohortshap.report import emit_histogram, group_table
from cohortshap.tabular import confusion

if find_compas():
    ds = load_compas()
    print(f"COMPAS: {ds.n} Black and White defendants")
else:
    ds = synthetic_audit()
    print(f"COMPAS export not found; synthetic stand-in with {ds.n} rows")
spec = SimilaritySpec.exact(ds.d)
black = ds.feature("race").values == 0

# group metrics
for name, m in (("Black", black), ("White", ~black)):
    c = confusion(ds.response("y"), ds.response("yhat"), m)
    print(f"{name}: FPR {c.fpr:.3f}  FNR {c.fnr:.3f}  "
          f"mean residual {np.mean(ds.response('y')[m] - ds.response('yhat')[m]):+.4f}")

# individual impacts of race on the prediction
yhat = all_targets(ds, spec, make_response(ds, "raw", name="yhat"))
race = np.array([a.phi[0] for a in yhat])
print(f"\nrace impact on yhat: Black in [{race[black].min():+.3f}, {race[black].max():+.3f}], "
      f"White in [{race[~black].min():+.3f}, {race[~black].max():+.3f}]")
h = emit_histogram(yhat, "race", {"Black": black, "White": ~black}, bin_width=0.01)
for g, counts in h.counts.items():
    print(f"  {g:<6}" + "".join("#" if c else "." for c in counts))

# residual impacts averaged over groups
groups = {n: Group(n, c) for n, c in [
    ("White", (("race", "White"),)), ("Black", (("race", "Black"),)),
    ("Male", (("sex", "Male"),)), ("Female", (("sex", "Female"),))]}
res = all_targets(ds, spec, make_response(ds, "residual"))
print("\nmean impact on the residual y - yhat")
print(group_table(aggregate_groups(res, groups, ds)), end="")

# false-positive view: restrict to defendants who did not reoffend
fp = conditional_attribution(ds, spec, Group("y0", (("y", "0"),)),
                             make_response(ds, "raw", name="yhat"))
r0 = np.array([a.phi[0] for a in fp])
b0 = black[ds.response("y") == 0]
print(f"\namong y=0: mean race impact on yhat, Black {r0[b0].mean():+.4f}, "
      f"White {r0[~b0].mean():+.4f}")
