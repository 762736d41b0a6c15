"""Preprocessing of the Broward County COMPAS export (``compas-scores-two-years.csv``).

The raw file is published at https://github.com/propublica/compas-analysis.
Row filters follow the ProPublica analysis (screening within 30 days of
arrest, known recidivism status, no ordinary traffic offences, a score
present); rows are then restricted to Black and White defendants.

Resulting features, in order: ``race`` (Black/White), ``age`` (<25, 25-45,
>45), ``priors`` (0, 1-3, 4-6, 7-10, >10), ``charge`` (F/M) and ``sex``.
Responses: ``y`` (two-year recidivism), ``decile`` and ``yhat`` (decile 5
or above).
"""

import csv
import os
from pathlib import Path

import numpy as np

from .tabular import (CATEGORICAL, CONTINUOUS, DataError, Dataset, FeatureColumn,
                      bin_continuous, make_response)

FILENAME = "compas-scores-two-years.csv"
ENV_VAR = "COHORTSHAP_COMPAS"

RACES = {"African-American": "Black", "Caucasian": "White"}
AGE_EDGES = (-np.inf, 25, 46, np.inf)
AGE_LEVELS = ("<25", "25-45", ">45")
PRIORS_EDGES = (0, 1, 4, 7, 11, np.inf)
PRIORS_LEVELS = ("0", "1-3", "4-6", "7-10", ">10")
HIGH_RISK_DECILE = 5


def find_compas(path=None):
    """Locate the raw export: explicit path, ``$COHORTSHAP_COMPAS``, then
    ``./data/``.  Returns None when absent."""
    candidates = [path, os.environ.get(ENV_VAR), Path.cwd() / "data" / FILENAME,
                  Path(__file__).resolve().parents[2] / "data" / FILENAME]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    # the export repeats some column names; the first occurrence wins
    first = {}
    for j, h in enumerate(header):
        first.setdefault(h.strip(), j)
    return first, rows[1:]


def _int_or_none(s):
    try:
        return int(float(s))
    except ValueError:
        return None


def load_compas(path=None) -> Dataset:
    path = find_compas(path)
    if path is None:
        raise DataError(f"{FILENAME} not found; set ${ENV_VAR} or place it in ./data/")
    col, body = _read(path)
    need = ["race", "age", "priors_count", "c_charge_degree", "sex", "two_year_recid",
            "decile_score", "days_b_screening_arrest", "is_recid", "score_text"]
    missing = [c for c in need if c not in col]
    if missing:
        raise DataError(f"COMPAS export lacks columns {missing}")
    keep = []
    for row in body:
        days = _int_or_none(row[col["days_b_screening_arrest"]])
        if days is None or not -30 <= days <= 30:
            continue
        if row[col["is_recid"]] == "-1" or row[col["c_charge_degree"]] == "O":
            continue
        if row[col["score_text"]] in ("N/A", ""):
            continue
        if row[col["race"]] not in RACES:
            continue
        keep.append(row)
    if not keep:
        raise DataError("no COMPAS rows survive preprocessing")

    def num(name):
        return np.array([float(r[col[name]]) for r in keep])

    age = bin_continuous(FeatureColumn("age", CONTINUOUS, num("age")), edges=AGE_EDGES)
    priors = bin_continuous(FeatureColumn("priors", CONTINUOUS, num("priors_count")),
                            edges=PRIORS_EDGES)
    race = [RACES[r[col["race"]]] for r in keep]
    feats = (
        FeatureColumn("race", CATEGORICAL, [0 if r == "Black" else 1 for r in race],
                      ("Black", "White")),
        FeatureColumn("age", CATEGORICAL, age.values, AGE_LEVELS),
        FeatureColumn("priors", CATEGORICAL, priors.values, PRIORS_LEVELS),
        FeatureColumn.categorical("charge", [r[col["c_charge_degree"]] for r in keep]),
        FeatureColumn.categorical("sex", [r[col["sex"]] for r in keep]),
    )
    ds = Dataset(feats, {"y": num("two_year_recid"), "decile": num("decile_score")})
    yhat = make_response(ds, "threshold", name="decile", cutpoint=HIGH_RISK_DECILE)
    return ds.with_response("yhat", yhat.values)
