"""Laurent polynomials and Laurent-polynomial matrices over Q.

A LaurentPoly is variable-agnostic; the variable tag lives on the matrix or
on the object that owns it.  Exponents are integers of either sign.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import DimensionMismatch

Q = Fraction


class LaurentPoly:
    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        # coeffs: dict exponent -> Fraction (zeros dropped)
        self.c = {}
        if coeffs:
            for e, v in coeffs.items():
                v = Q(v)
                if v != 0:
                    self.c[int(e)] = v

    @staticmethod
    def const(v):
        return LaurentPoly({0: Q(v)})

    @staticmethod
    def monomial(e, v=1):
        return LaurentPoly({e: Q(v)})

    @staticmethod
    def zero():
        return LaurentPoly()

    def is_zero(self):
        return not self.c

    def is_const(self):
        return not self.c or set(self.c) == {0}

    def const_value(self):
        if not self.is_const():
            raise ValueError("not a constant")
        return self.c.get(0, Q(0))

    def minexp(self):
        return min(self.c) if self.c else 0

    def maxexp(self):
        return max(self.c) if self.c else 0

    def coeff(self, e):
        return self.c.get(e, Q(0))

    def __add__(self, other):
        out = dict(self.c)
        for e, v in other.c.items():
            w = out.get(e, Q(0)) + v
            if w == 0:
                out.pop(e, None)
            else:
                out[e] = w
        return LaurentPoly(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return LaurentPoly({e: -v for e, v in self.c.items()})

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            out = {}
            for e1, v1 in self.c.items():
                for e2, v2 in other.c.items():
                    e = e1 + e2
                    w = out.get(e, Q(0)) + v1 * v2
                    if w == 0:
                        out.pop(e, None)
                    else:
                        out[e] = w
            return LaurentPoly(out)
        return self.scale(other)

    def scale(self, v):
        v = Q(v)
        return LaurentPoly({e: c * v for e, c in self.c.items()})

    def shift(self, k):
        """Multiply by x^k."""
        return LaurentPoly({e + k: v for e, v in self.c.items()})

    def euler(self):
        """x d/dx applied to self."""
        return LaurentPoly({e: e * v for e, v in self.c.items()})

    def deriv(self):
        """d/dx applied to self."""
        return LaurentPoly({e - 1: e * v for e, v in self.c.items() if e != 0})

    def flip(self):
        """Substitute x -> 1/x."""
        return LaurentPoly({-e: v for e, v in self.c.items()})

    def eval(self, x):
        x = Q(x)
        if not self.c:
            return Q(0)
        acc = Q(0)
        for e, v in self.c.items():
            acc += v * x ** e
        return acc

    def truncate(self, lo, hi):
        return LaurentPoly({e: v for e, v in self.c.items() if lo <= e <= hi})

    def __eq__(self, other):
        return isinstance(other, LaurentPoly) and self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __repr__(self):
        if not self.c:
            return "0"
        terms = []
        for e in sorted(self.c):
            v = self.c[e]
            if e == 0:
                terms.append(f"{v}")
            elif e == 1:
                terms.append(f"{v}*x")
            else:
                terms.append(f"{v}*x^{e}")
        return " + ".join(terms)

    # polynomial division (requires both operands polynomial in x)
    def divmod_poly(self, other):
        if self.minexp() < 0 or other.minexp() < 0:
            raise ValueError("divmod requires polynomial operands")
        if other.is_zero():
            raise ZeroDivisionError
        rem = dict(self.c)
        qd = {}
        dmax = other.maxexp()
        lead = other.c[dmax]
        while rem:
            e = max(rem)
            if e < dmax:
                break
            f = rem[e] / lead
            qd[e - dmax] = f
            for e2, v2 in other.c.items():
                k = e - dmax + e2
                w = rem.get(k, Q(0)) - f * v2
                if w == 0:
                    rem.pop(k, None)
                else:
                    rem[k] = w
        return LaurentPoly(qd), LaurentPoly(rem)


def lp(spec):
    """Small constructor: dict {exp: value} or scalar."""
    if isinstance(spec, LaurentPoly):
        return spec
    if isinstance(spec, dict):
        return LaurentPoly(spec)
    return LaurentPoly.const(spec)


class LaurentMatrix:
    """Matrix with LaurentPoly entries and a variable tag."""

    def __init__(self, rows, cols, entries=None, variable="x"):
        self.rows = rows
        self.cols = cols
        self.variable = variable
        if entries is None:
            self.m = [[LaurentPoly.zero() for _ in range(cols)]
                      for _ in range(rows)]
        else:
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise DimensionMismatch("entry grid shape mismatch")
            self.m = [[lp(e) for e in row] for row in entries]

    @staticmethod
    def identity(n, variable="x"):
        out = LaurentMatrix(n, n, variable=variable)
        for i in range(n):
            out.m[i][i] = LaurentPoly.const(1)
        return out

    @staticmethod
    def from_scalar(rows, variable="x"):
        return LaurentMatrix(len(rows), len(rows[0]) if rows else 0,
                             [[LaurentPoly.const(v) for v in row]
                              for row in rows], variable)

    def copy(self):
        return LaurentMatrix(self.rows, self.cols,
                             [[LaurentPoly(dict(e.c)) for e in row]
                              for row in self.m], self.variable)

    def is_scalar(self):
        return all(e.is_const() for row in self.m for e in row)

    def to_scalar(self):
        return [[e.const_value() for e in row] for row in self.m]

    def column(self, j):
        return [self.m[i][j] for i in range(self.rows)]

    def with_columns(self, cols):
        out = LaurentMatrix(self.rows, len(cols), variable=self.variable)
        for j, col in enumerate(cols):
            for i in range(self.rows):
                out.m[i][j] = col[i]
        return out

    def __add__(self, other):
        self._check_same(other)
        return LaurentMatrix(self.rows, self.cols,
                             [[a + b for a, b in zip(ra, rb)]
                              for ra, rb in zip(self.m, other.m)],
                             self.variable)

    def __sub__(self, other):
        self._check_same(other)
        return LaurentMatrix(self.rows, self.cols,
                             [[a - b for a, b in zip(ra, rb)]
                              for ra, rb in zip(self.m, other.m)],
                             self.variable)

    def __mul__(self, other):
        if isinstance(other, LaurentMatrix):
            if self.cols != other.rows:
                raise DimensionMismatch("inner dimensions differ")
            out = LaurentMatrix(self.rows, other.cols, variable=self.variable)
            for i in range(self.rows):
                for k in range(self.cols):
                    a = self.m[i][k]
                    if a.is_zero():
                        continue
                    for j in range(other.cols):
                        b = other.m[k][j]
                        if not b.is_zero():
                            out.m[i][j] = out.m[i][j] + a * b
            return out
        if isinstance(other, LaurentPoly):
            return LaurentMatrix(self.rows, self.cols,
                                 [[e * other for e in row] for row in self.m],
                                 self.variable)
        return LaurentMatrix(self.rows, self.cols,
                             [[e.scale(other) for e in row] for row in self.m],
                             self.variable)

    def mul_vec(self, vec):
        if len(vec) != self.cols:
            raise DimensionMismatch("vector length != cols")
        return [sum((self.m[i][j] * vec[j] for j in range(self.cols)),
                    LaurentPoly.zero()) for i in range(self.rows)]

    def scale_monomial(self, k):
        """Multiply every entry by x^k."""
        return LaurentMatrix(self.rows, self.cols,
                             [[e.shift(k) for e in row] for row in self.m],
                             self.variable)

    def map_entries(self, f):
        return LaurentMatrix(self.rows, self.cols,
                             [[f(e) for e in row] for row in self.m],
                             self.variable)

    def flip_variable(self, new_name=None):
        """Substitute x -> 1/x in every entry."""
        out = self.map_entries(lambda e: e.flip())
        if new_name:
            out.variable = new_name
        return out

    def minexp(self):
        es = [e.minexp() for row in self.m for e in row if not e.is_zero()]
        return min(es) if es else 0

    def maxexp(self):
        es = [e.maxexp() for row in self.m for e in row if not e.is_zero()]
        return max(es) if es else 0

    def coeff_matrix(self, e):
        return [[ent.coeff(e) for ent in row] for row in self.m]

    def eval(self, x):
        return [[ent.eval(x) for ent in row] for row in self.m]

    def is_zero(self):
        return all(e.is_zero() for row in self.m for e in row)

    def det(self):
        if self.rows != self.cols:
            raise DimensionMismatch("det of non-square matrix")
        n = self.rows
        if n == 0:
            return LaurentPoly.const(1)
        # cofactor expansion; fine for the small ranks used here
        if n == 1:
            return self.m[0][0]
        acc = LaurentPoly.zero()
        for j in range(n):
            a = self.m[0][j]
            if a.is_zero():
                continue
            sub = LaurentMatrix(n - 1, n - 1, [
                [self.m[i][k] for k in range(n) if k != j]
                for i in range(1, n)], self.variable)
            term = a * sub.det()
            acc = acc + term if j % 2 == 0 else acc - term
        return acc

    def _check_same(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise DimensionMismatch("shape mismatch")

    def __eq__(self, other):
        return (isinstance(other, LaurentMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.m == other.m)

    def __repr__(self):
        body = "; ".join(", ".join(repr(e) for e in row) for row in self.m)
        return f"LaurentMatrix[{self.variable}]({body})"

    # serialization per the connection wire format
    def to_entries_json(self):
        out = []
        for i in range(self.rows):
            for j in range(self.cols):
                e = self.m[i][j]
                if e.is_zero():
                    continue
                lo, hi = e.minexp(), e.maxexp()
                coeffs = [str(e.coeff(k)) for k in range(lo, hi + 1)]
                out.append([i, j, coeffs, lo])
        return out

    @staticmethod
    def from_entries_json(rows, cols, entries, variable="x"):
        out = LaurentMatrix(rows, cols, variable=variable)
        for i, j, coeffs, lo in entries:
            out.m[i][j] = LaurentPoly(
                {lo + k: Q(c) for k, c in enumerate(coeffs)})
        return out
