"""Small built-in datasets: the three-bit running example and a synthetic
fairness-audit table with a planted group effect."""

import numpy as np

from .tabular import CATEGORICAL, Dataset, FeatureColumn


def _bits(rows):
    return np.array(rows, dtype=np.int64)


#: All eight points of {0,1}^3 in the order (x1, x2, x3), x3 fastest.
CUBE = _bits([[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)])


def f1(x):
    x = np.asarray(x)
    return x[..., 0] - 2 * x[..., 1]


def f2(x):
    x = np.asarray(x)
    return x[..., 0] * x[..., 1] * (1 - x[..., 2])


def running_example(dependent=False):
    """The eight binary points of the cube with responses ``f1`` and ``f2``.

    With ``dependent=True`` the point (1, 1, 0), row 7 of the cube, is
    dropped, making x3 dependent on (x1, x2).  Row order is otherwise the
    cube order, so the target of interest (0, 0, 0) is row 0.
    """
    x = CUBE
    if dependent:
        x = x[~((x[:, 0] == 1) & (x[:, 1] == 1) & (x[:, 2] == 0))]
    feats = tuple(FeatureColumn(f"x{j + 1}", CATEGORICAL, x[:, j], ("0", "1"))
                  for j in range(3))
    return Dataset(feats, {"f1": f1(x).astype(float), "f2": f2(x).astype(float)})


def synthetic_audit(n=4000, seed=0, effect=0.06):
    """Synthetic recidivism-style audit table.

    Features: ``race`` (Black/White), ``age`` (3 levels), ``priors``
    (5 levels), ``charge`` (F/M), ``sex``.  The score ``yhat`` uses age and
    priors only; priors are shifted up for Black rows.  The outcome ``y``
    carries an extra ``effect`` for White rows, so the residual has a race
    effect that the score does not model.
    """
    rng = np.random.default_rng(seed)
    black = rng.random(n) < 0.6
    male = rng.random(n) < 0.8
    age = rng.choice(3, size=n, p=[0.25, 0.55, 0.20])
    lam = np.where(black, 3.5, 2.0)
    priors = np.digitize(rng.poisson(lam), [1, 4, 7, 11])
    felony = rng.random(n) < 0.65
    risk = -0.9 + 0.45 * priors - 0.5 * age + 0.3 * male
    score = 1 / (1 + np.exp(-risk))
    yhat = (score > 0.5).astype(float)
    p_true = np.clip(score + np.where(black, -effect / 2, effect), 0.01, 0.99)
    y = (rng.random(n) < p_true).astype(float)
    feats = (
        FeatureColumn("race", CATEGORICAL, np.where(black, 0, 1), ("Black", "White")),
        FeatureColumn("age", CATEGORICAL, age, ("<25", "25-45", ">45")),
        FeatureColumn("priors", CATEGORICAL, priors, ("0", "1-3", "4-6", "7-10", ">10")),
        FeatureColumn("charge", CATEGORICAL, np.where(felony, 0, 1), ("F", "M")),
        FeatureColumn("sex", CATEGORICAL, np.where(male, 0, 1), ("Male", "Female")),
    )
    return Dataset(feats, {"y": y, "yhat": yhat})
