"""Exact linear algebra over Q.

Matrices are lists of rows, entries ``fractions.Fraction``.  Everything here
is deterministic: echelon pivoting always picks the leftmost column and the
lowest row index.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import DimensionMismatch, IrrationalEigenvalue

Q = Fraction


def qmat(rows):
    """Deep-copy a matrix, coercing entries to Fraction."""
    return [[Q(x) for x in row] for row in rows]


def identity(n):
    return [[Q(1) if i == j else Q(0) for j in range(n)] for i in range(n)]


def zeros(n, m):
    return [[Q(0)] * m for _ in range(n)]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = zeros(n, m)
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for p in range(k):
            c = ai[p]
            if c == 0:
                continue
            bp = b[p]
            for j in range(m):
                oi[j] += c * bp[j]
    return out


def mat_vec(a, v):
    return [sum((c * x for c, x in zip(row, v)), Q(0)) for row in a]


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a, c):
    return [[c * x for x in row] for row in a]


def transpose(a):
    return [list(col) for col in zip(*a)] if a else []


def rref(rows):
    """Reduced row echelon form.

    Returns ``(echelon_rows, pivot_columns)``; zero rows are dropped.
    """
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, len(m)):
            if m[i][c] != 0:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = Q(1) / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def mat_inv(a):
    n = len(a)
    aug = [list(row) + list(e) for row, e in zip(qmat(a), identity(n))]
    ech, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise DimensionMismatch("matrix not invertible")
    return [row[n:] for row in ech]


def kernel_basis(a):
    """Basis of the right kernel of ``a`` (list of vectors)."""
    if not a:
        return []
    ncols = len(a[0])
    ech, piv = rref(a)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for fc in free:
        v = [Q(0)] * ncols
        v[fc] = Q(1)
        for r, pc in enumerate(piv):
            v[pc] = -ech[r][fc]
        basis.append(v)
    return basis


class Subspace:
    """A linear subspace of Q^n, stored as a reduced row echelon basis."""

    def __init__(self, ambient, vectors=()):
        self.ambient = ambient
        rows = [list(v) for v in vectors if any(x != 0 for x in v)]
        for v in rows:
            if len(v) != ambient:
                raise DimensionMismatch("vector length != ambient dimension")
        self.basis, self.pivots = rref(rows)

    @property
    def dim(self):
        return len(self.basis)

    def contains(self, v):
        w = [Q(x) for x in v]
        for row, p in zip(self.basis, self.pivots):
            if w[p] != 0:
                c = w[p]
                w = [x - c * y for x, y in zip(w, row)]
        return all(x == 0 for x in w)

    def contains_space(self, other):
        return all(self.contains(v) for v in other.basis)

    def add(self, other):
        self._check(other)
        return Subspace(self.ambient, self.basis + other.basis)

    def intersect(self, other):
        """Exact intersection via the kernel of stacked constraints.

        A vector lies in both spaces iff it is orthogonal to the kernels of
        the two row spaces; equivalently solve x = B1^T u = B2^T w.
        """
        self._check(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace(self.ambient)
        # columns: u-coefficients then w-coefficients; rows: ambient coords
        sys_rows = []
        for i in range(self.ambient):
            row = [b[i] for b in self.basis] + [-b[i] for b in other.basis]
            sys_rows.append(row)
        vecs = []
        for k in kernel_basis(sys_rows):
            u = k[: self.dim]
            vec = [sum((u[j] * self.basis[j][i] for j in range(self.dim)), Q(0))
                   for i in range(self.ambient)]
            vecs.append(vec)
        return Subspace(self.ambient, vecs)

    def _check(self, other):
        if self.ambient != other.ambient:
            raise DimensionMismatch("ambient dimensions differ")

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.ambient == other.ambient
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient, tuple(tuple(r) for r in self.basis)))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def solve_linear(a, b):
    """Exact solution set of A x = b.

    Returns ``(particular, kernel)`` where ``particular`` is None when the
    system is inconsistent and ``kernel`` is a :class:`Subspace`.
    """
    n = len(a)
    if len(b) != n:
        raise DimensionMismatch("rhs length != row count")
    ncols = len(a[0]) if a else 0
    aug = [list(map(Q, row)) + [Q(v)] for row, v in zip(a, b)]
    ech, piv = rref(aug)
    if ncols in piv:
        return None, Subspace(ncols, kernel_basis(qmat(a)))
    x = [Q(0)] * ncols
    for row, p in zip(ech, piv):
        x[p] = row[-1]
    return x, Subspace(ncols, kernel_basis(qmat(a)))


def subspace_intersect(s1, s2):
    return s1.intersect(s2)


def charpoly(a):
    """Characteristic polynomial det(T*I - A), Faddeev-LeVerrier.

    Returns coefficients [c0, c1, ..., cn] with cn = 1, i.e.
    p(T) = sum c_k T^k.
    """
    n = len(a)
    coeffs = [Q(0)] * (n + 1)
    coeffs[n] = Q(1)
    m = zeros(n, n)
    for k in range(1, n + 1):
        m = mat_mul(a, m)
        for i in range(n):
            m[i][i] += coeffs[n - k + 1]
        trace = sum((mat_mul(a, m)[i][i] for i in range(n)), Q(0))
        coeffs[n - k] = -trace / k
    return coeffs


def _divisors(n):
    n = abs(n)
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def poly_eval(coeffs, x):
    acc = Q(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_div_linear(coeffs, root):
    """Divide p(T) by (T - root); p(root) must be 0."""
    out = [Q(0)] * (len(coeffs) - 1)
    acc = Q(0)
    for k in range(len(coeffs) - 1, 0, -1):
        acc = coeffs[k] + acc * root
        out[k - 1] = acc
    assert poly_eval(coeffs, root) == 0
    return out


def rational_roots(coeffs):
    """All rational roots of a Q-coefficient polynomial, with multiplicities.

    Returns ``(roots, fully_split)`` where roots is a list of
    ``(Fraction, multiplicity)`` and fully_split says whether the polynomial
    factors completely over Q.
    """
    p = list(coeffs)
    while p and p[-1] == 0:
        p.pop()
    if not p:
        raise ValueError("zero polynomial")
    # strip T^k factor -> roots at 0
    mult0 = 0
    while p[0] == 0:
        mult0 += 1
        p = p[1:]
    roots = []
    if mult0:
        roots.append((Q(0), mult0))
    if len(p) == 1:
        return roots, True
    den = 1
    for c in p:
        den = den * c.denominator // _gcd(den, c.denominator)
    ip = [int(c * den) for c in p]
    g = 0
    for c in ip:
        g = _gcd(g, c)
    ip = [c // g for c in ip]
    cand = set()
    for pn in _divisors(ip[0]):
        for qd in _divisors(ip[-1]):
            cand.add(Q(pn, qd))
            cand.add(Q(-pn, qd))
    work = [Q(c) for c in ip]
    for r in sorted(cand):
        mult = 0
        while len(work) > 1 and poly_eval(work, r) == 0:
            work = poly_div_linear(work, r)
            mult += 1
        if mult:
            roots.append((r, mult))
    return roots, len(work) == 1


def _gcd(a, b):
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a if a else 1


def rational_eigendata(a):
    """Rational eigenvalues with exact generalized eigenspaces.

    Raises :class:`IrrationalEigenvalue` when the characteristic polynomial
    does not split over Q.  The generalized eigenspace for lambda is
    ker (A - lambda)^n.
    """
    n = len(a)
    if any(len(row) != n for row in a):
        raise DimensionMismatch("matrix not square")
    a = qmat(a)
    roots, split = rational_roots(charpoly(a))
    if not split:
        raise IrrationalEigenvalue(
            "characteristic polynomial has a non-rational root")
    out = []
    for lam, mult in sorted(roots):
        shifted = [[a[i][j] - (lam if i == j else 0) for j in range(n)]
                   for i in range(n)]
        power = identity(n)
        for _ in range(mult):
            power = mat_mul(power, shifted)
        space = Subspace(n, kernel_basis(power))
        assert space.dim == mult
        out.append((lam, space))
    assert sum(m for _, m in roots) == n
    return out
