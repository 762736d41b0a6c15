"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: plain Python loops, the textbook
subset-weighted Shapley formula and exact rationals where inputs allow.
"""

import itertools
import math
from fractions import Fraction


def subsets(d):
    return range(1 << d)


def members(u, d):
    return [j for j in range(d) if u >> j & 1]


def brute_cohort(rows, t, u, d, similar=None):
    """Row indices agreeing with row ``t`` on every feature in ``u``."""
    similar = similar or (lambda j, a, b: a == b)
    return [i for i, row in enumerate(rows)
            if all(similar(j, row[j], rows[t][j]) for j in members(u, d))]


def brute_value(rows, r, t, u, d, w=None, similar=None, exact=False):
    idx = brute_cohort(rows, t, u, d, similar)
    w = w or [1] * len(rows)
    if exact:
        num = sum(Fraction(w[i]) * Fraction(r[i]) for i in idx)
        return num / sum(Fraction(w[i]) for i in idx)
    return sum(w[i] * r[i] for i in idx) / sum(w[i] for i in idx)


def brute_shapley(nu, d, exact=False):
    """Subset-weighted Shapley formula over an arbitrary callable ``nu``."""
    out = []
    for j in range(d):
        acc = Fraction(0) if exact else 0.0
        for u in subsets(d):
            if u >> j & 1:
                continue
            k = bin(u).count("1")
            if exact:
                wt = Fraction(math.factorial(k) * math.factorial(d - k - 1), math.factorial(d))
            else:
                wt = math.factorial(k) * math.factorial(d - k - 1) / math.factorial(d)
            acc += wt * (nu(u | (1 << j)) - nu(u))
        out.append(acc)
    return out


def brute_permutation_shapley(nu, d):
    out = [0.0] * d
    perms = list(itertools.permutations(range(d)))
    for p in perms:
        u = 0
        for j in p:
            out[j] += nu(u | (1 << j)) - nu(u)
            u |= 1 << j
    return [x / len(perms) for x in out]


def brute_anova(values, d):
    """Effects of a function on {0,1}^d under the uniform law, by Moebius
    inversion of conditional means.  ``values[x]`` is indexed by the bitmask
    of x (bit j = x_j)."""
    N = 1 << d

    def cond_mean(u, x):
        pts = [y for y in range(N) if (y & u) == (x & u)]
        return sum(values[y] for y in pts) / len(pts)

    effects = {}
    for u in subsets(d):
        effects[u] = [sum((-1) ** bin(u & ~v).count("1") * cond_mean(v, x)
                          for v in subsets(d) if v & ~u == 0)
                      for x in range(N)]
    return effects
