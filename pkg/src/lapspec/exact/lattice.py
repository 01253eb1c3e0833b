"""Lattices over C[u] inside a free Laurent module, with exact windowed slices.

A lattice here is a finitely generated C[u]-submodule of C[x, 1/x]^n where
u = x (side '0') or u = 1/x (side 'inf').  It is stored canonically as a
global power of u times a column Hermite normal form over Q[u], so lattice
equality is literal equality of the canonical data.

Window slices turn module questions into finite Q-linear algebra: the slice
of a lattice in an exponent window is computed exactly by parametrizing
elements through the (triangular) HNF basis with a provable degree bound.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import DimensionMismatch, WindowTooSmall
from .laurent import LaurentPoly
from .linalg import Subspace

Q = Fraction


def _vec_is_zero(v):
    return all(e.is_zero() for e in v)


def _vec_sub_scaled(a, b, q):
    """a - q*b entrywise (q a LaurentPoly)."""
    return [x - q * y for x, y in zip(a, b)]


def poly_hnf_columns(cols, n):
    """Column Hermite normal form over Q[u].

    ``cols`` is a list of length-n vectors of polynomial LaurentPoly (all
    exponents >= 0).  Returns ``(basis, pivot_rows)`` where basis columns
    have strictly increasing topmost-nonzero rows, monic pivots, and entries
    of earlier columns reduced modulo later pivots.  Deterministic.
    """
    work = [list(c) for c in cols if not _vec_is_zero(c)]
    basis = []
    pivot_rows = []
    for r in range(n):
        sub = [c for c in work if not c[r].is_zero()]
        while len(sub) > 1:
            sub.sort(key=lambda c: c[r].maxexp())
            a = sub[0]
            for b in sub[1:]:
                q, _ = b[r].divmod_poly(a[r])
                nb = _vec_sub_scaled(b, a, q)
                for i in range(n):
                    b[i] = nb[i]
            sub = [c for c in sub if not c[r].is_zero()]
            work = [c for c in work if not _vec_is_zero(c)]
        if sub:
            piv = sub[0]
            work = [c for c in work if c is not piv]
            basis.append(piv)
            pivot_rows.append(r)
    # monic pivots
    for col, r in zip(basis, pivot_rows):
        lead = col[r].c[col[r].maxexp()]
        inv = Q(1) / lead
        for i in range(n):
            col[i] = col[i].scale(inv)
    # reduce pivot-row entries of earlier columns modulo later pivots
    for j in range(len(basis) - 1, -1, -1):
        rj = pivot_rows[j]
        for i in range(j):
            q, _ = basis[i][rj].divmod_poly(basis[j][rj])
            if not q.is_zero():
                basis[i] = _vec_sub_scaled(basis[i], basis[j], q)
    return basis, pivot_rows


class Lattice:
    """Canonical C[u]-lattice in C[x,1/x]^n.

    side '0'  : u = x   (span over polynomials in x)
    side 'inf': u = 1/x (span over polynomials in 1/x)
    """

    def __init__(self, ambient, var, side, shift, basis_u, pivot_rows):
        self.ambient = ambient
        self.var = var
        self.side = side
        self.shift = shift          # lattice = u^shift * span(basis_u)
        self.basis_u = basis_u      # HNF columns, polynomial in u
        self.pivot_rows = pivot_rows

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_generators(vectors, ambient, var="x", side="0"):
        """Canonical lattice generated over C[u] by ambient Laurent vectors."""
        ucols = []
        for v in vectors:
            if len(v) != ambient:
                raise DimensionMismatch("generator length != ambient")
            col = [_to_u(e, side) for e in v]
            if not _vec_is_zero(col):
                ucols.append(col)
        if not ucols:
            return Lattice(ambient, var, side, 0, [], [])
        shift = min(e.minexp() for col in ucols for e in col
                    if not e.is_zero())
        ucols = [[e.shift(-shift) for e in col] for col in ucols]
        basis, pivots = poly_hnf_columns(ucols, ambient)
        extra = min((e.minexp() for col in basis for e in col
                     if not e.is_zero()), default=0)
        if extra > 0:
            basis = [[e.shift(-extra) for e in col] for col in basis]
            shift += extra
        return Lattice(ambient, var, side, shift, basis, pivots)

    @staticmethod
    def standard(ambient, var="x", side="0"):
        vecs = []
        for i in range(ambient):
            v = [LaurentPoly.zero()] * ambient
            v[i] = LaurentPoly.const(1)
            vecs.append(v)
        return Lattice.from_generators(vecs, ambient, var, side)

    # -- views ------------------------------------------------------------

    @property
    def rank(self):
        return len(self.basis_u)

    def basis_columns(self):
        """Basis columns as ambient-variable Laurent vectors."""
        return [[_from_u(e.shift(self.shift), self.side) for e in col]
                for col in self.basis_u]

    def is_full(self):
        return self.rank == self.ambient

    # -- module operations --------------------------------------------------

    def scaled_by_var_power(self, k):
        """The lattice x^k * L (ambient-variable power)."""
        ushift = k if self.side == "0" else -k
        return Lattice(self.ambient, self.var, self.side, self.shift + ushift,
                       self.basis_u, self.pivot_rows)

    def add(self, other):
        self._compat(other)
        return Lattice.from_generators(
            self.basis_columns() + other.basis_columns(),
            self.ambient, self.var, self.side)

    def coordinates(self, ambient_vec):
        """C[u]-coordinates of a vector in the HNF basis, or None.

        Returns a list of polynomial LaurentPoly (in u) when the vector lies
        in the lattice.
        """
        v = [_to_u(e, self.side).shift(-self.shift) for e in ambient_vec]
        if any((not e.is_zero()) and e.minexp() < 0 for e in v):
            return None
        coords = [LaurentPoly.zero()] * self.rank
        for j, (col, r) in enumerate(zip(self.basis_u, self.pivot_rows)):
            for rr in range(r):
                if not v[rr].is_zero():
                    return None
            if v[r].is_zero():
                continue
            q, rem = v[r].divmod_poly(col[r])
            if not rem.is_zero():
                return None
            if (not q.is_zero()) and q.minexp() < 0:
                return None
            coords[j] = q
            v = _vec_sub_scaled(v, col, q)
        return coords if _vec_is_zero(v) else None

    def contains_vector(self, ambient_vec):
        return self.coordinates(ambient_vec) is not None

    def contains(self, other):
        self._compat(other)
        return all(self.contains_vector(c) for c in other.basis_columns())

    def _compat(self, other):
        if (self.ambient, self.var, self.side) != (other.ambient, other.var,
                                                   other.side):
            raise DimensionMismatch("lattices live in different modules")

    def __eq__(self, other):
        return (isinstance(other, Lattice)
                and (self.ambient, self.var, self.side, self.shift)
                == (other.ambient, other.var, other.side, other.shift)
                and self.pivot_rows == other.pivot_rows
                and self.basis_u == other.basis_u)

    def __repr__(self):
        return (f"Lattice(var={self.var!r}, side={self.side!r}, "
                f"rank={self.rank}, shift={self.shift})")

    def max_entry_degree(self):
        return max((e.maxexp() for col in self.basis_u for e in col
                    if not e.is_zero()), default=0)


def _to_u(e, side):
    return e if side == "0" else e.flip()


def _from_u(e, side):
    return e if side == "0" else e.flip()


# -- windowed slices ------------------------------------------------------


class Window:
    """Ambient exponent window [lo, hi] with fixed coordinates.

    Coordinates of a Laurent vector v: index (e - lo) * n + i for the
    coefficient of x^e in component i.
    """

    def __init__(self, lo, hi, ambient):
        if hi < lo:
            raise ValueError("empty window")
        self.lo = lo
        self.hi = hi
        self.ambient = ambient

    @property
    def dim(self):
        return (self.hi - self.lo + 1) * self.ambient

    def coords(self, vec):
        out = [Q(0)] * self.dim
        for i, e in enumerate(vec):
            for k, v in e.c.items():
                if not (self.lo <= k <= self.hi):
                    raise ValueError("vector support leaves the window")
                out[(k - self.lo) * self.ambient + i] = v
        return out

    def vector(self, coords):
        out = [LaurentPoly.zero() for _ in range(self.ambient)]
        for idx, v in enumerate(coords):
            if v == 0:
                continue
            e = idx // self.ambient + self.lo
            i = idx % self.ambient
            out[i] = out[i] + LaurentPoly.monomial(e, v)
        return out

    def doubled(self):
        span = self.hi - self.lo + 1
        return Window(self.lo - span, self.hi + span, self.ambient)


def window_slice(lattice, window, multiplier=None):
    """Exact subspace {v in q*L : supp(v) within window}, as window coords.

    ``multiplier`` is an optional ambient-variable LaurentPoly q; when given
    the module sliced is q*L.  Exactness: elements of q*L are q*B*p with a
    free triangular basis B, so coefficientwise linear algebra with a large
    enough degree bound for p enumerates the slice exactly.
    """
    n = lattice.ambient
    if window.ambient != n:
        raise DimensionMismatch("window ambient mismatch")
    if lattice.rank == 0:
        return Subspace(window.dim)
    gens = lattice.basis_columns()
    if multiplier is not None and not multiplier.is_zero():
        gens = [[multiplier * e for e in col] for col in gens]
    elif multiplier is not None:
        return Subspace(window.dim)
    # Degree bound for the u-coordinates p_i.  Elements are sums p_i * g_i
    # over a triangular basis; solving the triangular system shows each
    # deg p_i is at most the window top (in u, relative to the generator
    # bottom) plus n times the basis degree spread.
    u_exps = []
    for col in gens:
        for e in col:
            if not e.is_zero():
                em, eM = e.minexp(), e.maxexp()
                u_exps.extend((em, eM) if lattice.side == "0"
                              else (-eM, -em))
    u_min, u_max = min(u_exps), max(u_exps)
    spread = u_max - u_min
    u_hi = window.hi if lattice.side == "0" else -window.lo
    kmax = max(0, u_hi - u_min) + (n + 1) * spread + n + 2
    # columns of the Q-system: u^k * gen_j ; rows: all coefficients seen
    cols = []
    for col in gens:
        step = 1 if lattice.side == "0" else -1
        for k in range(kmax + 1):
            cols.append([e.shift(step * k) for e in col])
    exps = set()
    for col in cols:
        for e in col:
            exps.update(e.c.keys())
    exps = sorted(exps)
    pos = {e: idx for idx, e in enumerate(exps)}
    nrows = len(exps) * n
    sys_rows = [[Q(0)] * len(cols) for _ in range(nrows)]
    for j, col in enumerate(cols):
        for i, e in enumerate(col):
            for k, v in e.c.items():
                sys_rows[pos[k] * n + i][j] = v
    # constraint rows: coefficients outside the window vanish
    outside = [idx for idx, e in enumerate(exps)
               if e < window.lo or e > window.hi]
    constraint = []
    for idx in outside:
        constraint.extend(sys_rows[idx * n: (idx + 1) * n])
    from .linalg import kernel_basis
    if constraint:
        kern = kernel_basis(constraint)
    else:
        kern = [[Q(1) if i == j else Q(0) for j in range(len(cols))]
                for i in range(len(cols))]
    vecs = []
    for kv in kern:
        coords = [Q(0)] * window.dim
        for j, c in enumerate(kv):
            if c == 0:
                continue
            for i, e in enumerate(cols[j]):
                for k, v in e.c.items():
                    if window.lo <= k <= window.hi:
                        coords[(k - window.lo) * n + i] += c * v
        vecs.append(coords)
    return Subspace(window.dim, vecs)


def stabilized(compute, window, max_doublings=6):
    """Run ``compute(window)`` and re-run at doubled windows until two
    successive results agree.  Returns the stable result."""
    prev = compute(window)
    w = window
    for _ in range(max_doublings):
        w = w.doubled()
        cur = compute(w)
        if cur == prev:
            return cur
        prev = cur
    raise WindowTooSmall("windowed computation did not stabilize")


def span_window_slice(gens, window):
    """Exact slice of the C[x, 1/x]-span of Laurent generators in a window.

    ``gens`` should be triangular (e.g. an HNF-derived basis) so that the
    two-sided degree bound on the Laurent coefficients is provable by
    back-substitution.
    """
    from .linalg import kernel_basis

    n = window.ambient
    gens = [list(g) for g in gens if any(not e.is_zero() for e in g)]
    if not gens:
        return Subspace(window.dim)
    exps_all = [x for g in gens for e in g for x in (e.minexp(), e.maxexp())
                if not e.is_zero()]
    spread = max(exps_all) - min(exps_all)
    span = window.hi - window.lo + 1
    kmax = span + (n + 1) * spread + n + 2
    cols = []
    for g in gens:
        for k in range(-kmax, kmax + 1):
            cols.append([e.shift(k) for e in g])
    exps = sorted({e for col in cols for ee in col for e in ee.c})
    pos = {e: idx for idx, e in enumerate(exps)}
    rows = [[Q(0)] * len(cols) for _ in range(len(exps) * n)]
    for j, col in enumerate(cols):
        for i, ee in enumerate(col):
            for e, v in ee.c.items():
                rows[pos[e] * n + i][j] = v
    outside = [idx for idx, e in enumerate(exps)
               if e < window.lo or e > window.hi]
    constraint = []
    for idx in outside:
        constraint.extend(rows[idx * n: (idx + 1) * n])
    if constraint:
        kern = kernel_basis(constraint)
    else:
        kern = [[Q(1) if i == j else Q(0) for j in range(len(cols))]
                for i in range(len(cols))]
    vecs = []
    for kv in kern:
        coords = [Q(0)] * window.dim
        for j, c in enumerate(kv):
            if c == 0:
                continue
            for i, ee in enumerate(cols[j]):
                for e, v in ee.c.items():
                    if window.lo <= e <= window.hi:
                        coords[(e - window.lo) * n + i] += c * v
        vecs.append(coords)
    return Subspace(window.dim, vecs)
