"""Rational functions over Q in one variable, built on polynomial LaurentPoly.

Used by the D-module layer, where normal forms of cyclic-module classes have
denominators at the singular points.  Always stored reduced with a monic
denominator.
"""

from __future__ import annotations

from fractions import Fraction

from .laurent import LaurentPoly

Q = Fraction


def poly_gcd(a, b):
    """Monic gcd of two polynomial LaurentPoly."""
    a, b = LaurentPoly(dict(a.c)), LaurentPoly(dict(b.c))
    if a.minexp() < 0 or b.minexp() < 0:
        raise ValueError("gcd requires polynomials")
    while not b.is_zero():
        _, r = a.divmod_poly(b)
        a, b = b, r
    if a.is_zero():
        return a
    return a.scale(Q(1) / a.c[a.maxexp()])


def poly_from_roots(roots):
    out = LaurentPoly.const(1)
    for r in roots:
        out = out * LaurentPoly({1: Q(1), 0: -Q(r)})
    return out


class RatFunc:
    __slots__ = ("num", "den")

    def __init__(self, num, den=None, reduce=True):
        if not isinstance(num, LaurentPoly):
            num = LaurentPoly.const(num)
        if den is None:
            den = LaurentPoly.const(1)
        elif not isinstance(den, LaurentPoly):
            den = LaurentPoly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        # clear Laurent tails into honest polynomials
        shift = min(num.minexp() if not num.is_zero() else 0, den.minexp())
        if shift < 0:
            num = num.shift(-shift)
            den = den.shift(-shift)
        if reduce:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def zero():
        return RatFunc(LaurentPoly.zero())

    @staticmethod
    def const(v):
        return RatFunc(LaurentPoly.const(v))

    def is_zero(self):
        return self.num.is_zero()

    def __add__(self, other):
        other = _coerce(other)
        return RatFunc(self.num * other.den + other.num * self.den,
                       self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __mul__(self, other):
        other = _coerce(other)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.is_zero():
            raise ZeroDivisionError
        return RatFunc(self.num * other.den, self.den * other.num)

    def deriv(self):
        return RatFunc(self.num.deriv() * self.den -
                       self.num * self.den.deriv(), self.den * self.den)

    def eval(self, x):
        dv = self.den.eval(x)
        if dv == 0:
            raise ZeroDivisionError(f"pole at {x}")
        return self.num.eval(x) / dv

    def valuation_at(self, c):
        """Order of vanishing at x = c (negative for a pole); None if zero."""
        if self.is_zero():
            return None
        return _val(self.num, c) - _val(self.den, c)

    def valuation_at_zero(self):
        if self.is_zero():
            return None
        return self.num.minexp() - self.den.minexp()

    def degree(self):
        """Degree as a rational function at infinity: deg num - deg den."""
        if self.is_zero():
            return None
        return self.num.maxexp() - self.den.maxexp()

    def substitute_shift(self, c):
        """The rational function x -> f(x + c)."""
        return RatFunc(_poly_shift_arg(self.num, c),
                       _poly_shift_arg(self.den, c))

    def is_polynomial(self):
        return self.den.is_const()

    def as_poly(self):
        if not self.is_polynomial():
            raise ValueError("not a polynomial")
        return self.num.scale(Q(1) / self.den.const_value())

    def is_laurent(self):
        """True when the denominator is a monomial."""
        return len(self.den.c) == 1

    def as_laurent(self):
        if not self.is_laurent():
            raise ValueError("denominator is not a monomial")
        (e, v), = self.den.c.items()
        return self.num.shift(-e).scale(Q(1) / v)

    def series_coeff(self, lo, hi):
        """Exact Laurent-series coefficients at x=0 for exponents lo..hi."""
        v = self.valuation_at_zero()
        if v is None:
            return {k: Q(0) for k in range(lo, hi + 1)}
        num = self.num
        den = self.den
        dmin = den.minexp()
        dlead = den.coeff(dmin)
        out = {}
        # long division of num by den in increasing powers
        rem = dict(num.c)
        while rem:
            lead_exp = min(rem)
            e = lead_exp - dmin
            if e > hi:
                break
            coef = rem[lead_exp] / dlead
            out[e] = coef
            for de, dv in den.c.items():
                kk = e + de
                w = rem.get(kk, Q(0)) - coef * dv
                if w == 0:
                    rem.pop(kk, None)
                else:
                    rem[kk] = w
        return {k: out.get(k, Q(0)) for k in range(lo, hi + 1)}

    def __eq__(self, other):
        other = _coerce(other)
        return (self.num * other.den) == (other.num * self.den)

    def __repr__(self):
        if self.den.is_const() and self.den.const_value() == 1:
            return repr(self.num)
        return f"({self.num!r})/({self.den!r})"


def _coerce(v):
    if isinstance(v, RatFunc):
        return v
    if isinstance(v, LaurentPoly):
        return RatFunc(v)
    return RatFunc(LaurentPoly.const(v))


def _reduce(num, den):
    if num.is_zero():
        return LaurentPoly.zero(), LaurentPoly.const(1)
    g = poly_gcd(num, den)
    if not g.is_const():
        num, _ = num.divmod_poly(g)
        den, _ = den.divmod_poly(g)
    lead = den.c[den.maxexp()]
    return num.scale(Q(1) / lead), den.scale(Q(1) / lead)


def _val(poly, c):
    c = Q(c)
    if c == 0:
        return poly.minexp()
    v = 0
    cur = poly
    lin = LaurentPoly({1: Q(1), 0: -c})
    while True:
        if cur.eval(c) != 0:
            return v
        cur, r = cur.divmod_poly(lin)
        assert r.is_zero()
        v += 1


def _poly_shift_arg(poly, c):
    """p(x + c) for a polynomial p."""
    c = Q(c)
    out = LaurentPoly.zero()
    xpc = LaurentPoly({1: Q(1), 0: c})
    power = LaurentPoly.const(1)
    for e in range(0, poly.maxexp() + 1):
        v = poly.coeff(e)
        if v != 0:
            out = out + power.scale(v)
        power = power * xpc
    return out
