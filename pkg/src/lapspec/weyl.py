"""Weyl-algebra elements in one variable, in normal order.

An element is a dict {(i, j): Fraction} representing sum a_ij x^i d^j with
all x's to the left of all d's.  Products are normal-ordered through
d^b x^c = sum_k k! C(b,k) C(c,k) x^{c-k} d^{b-k}.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial

Q = Fraction


def weyl(entries):
    """Build from {(i, j): coeff} or a list of (i, j, coeff)."""
    out = {}
    items = entries.items() if isinstance(entries, dict) else \
        ((tuple(e[:2]), e[2]) for e in entries)
    for (i, j), v in items:
        v = Q(v)
        if v:
            out[(int(i), int(j))] = out.get((int(i), int(j)), Q(0)) + v
    return {k: v for k, v in out.items() if v != 0}


def weyl_add(a, b):
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, Q(0)) + v
        if w == 0:
            out.pop(k, None)
        else:
            out[k] = w
    return out


def weyl_scale(a, c):
    c = Q(c)
    return {} if c == 0 else {k: v * c for k, v in a.items()}


def weyl_mul(a, b):
    out = {}
    for (i1, j1), v1 in a.items():
        for (i2, j2), v2 in b.items():
            for k in range(0, min(j1, i2) + 1):
                coef = v1 * v2 * factorial(k) * comb(j1, k) * comb(i2, k)
                key = (i1 + i2 - k, j1 + j2 - k)
                w = out.get(key, Q(0)) + coef
                if w == 0:
                    out.pop(key, None)
                else:
                    out[key] = w
    return out


def weyl_pow(a, k):
    out = {(0, 0): Q(1)}
    for _ in range(k):
        out = weyl_mul(out, a)
    return out


def d_order(a):
    return max((j for (_, j) in a), default=-1)


def x_degree(a):
    return max((i for (i, _) in a), default=-1)


def coeff_of_d(a, j):
    """Coefficient of d^j as {exp: Fraction} in x."""
    return {i: v for (i, jj), v in a.items() if jj == j}


def laplace_substitute(a):
    """Fourier-Laplace substitution x -> -d, d -> x (new variable).

    Sends t^i d_t^j to (-d)^i x^j in the transformed Weyl algebra, so the
    transform of a module presentation D/(P) is D/(P-hat).
    """
    md = {(0, 1): Q(-1)}
    xx = {(1, 0): Q(1)}
    out = {}
    for (i, j), v in a.items():
        term = weyl_mul(weyl_pow(md, i), weyl_pow(xx, j))
        out = weyl_add(out, weyl_scale(term, v))
    return out


def weyl_to_json(a):
    return [[i, j, str(v)] for (i, j), v in sorted(a.items())]


def weyl_from_json(data):
    return weyl([(int(i), int(j), Q(v)) for i, j, v in data])
