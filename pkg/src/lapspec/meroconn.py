"""Meromorphic connections on the punctured line with lattices.

Conventions (fixed once, used everywhere):

* A connection is presented by a square Laurent matrix A in a variable x
  and a derivation tag.  The matrix acts on basis vectors: D(e_j) =
  sum_i A[i][j] e_i, so on a coefficient vector v the derivation acts as
  delta(v) + A v, where delta applies the derivation coefficientwise.
* Derivations: "euler" is x d/dx; "z2dz" is x^2 d/dx.  The two presentations
  of the same connection differ by one power of x: A_z2dz = x * A_euler.
* At the point x = 0 the local Euler derivation is x d/dx; at x = infinity,
  in the local coordinate u = 1/x, it is u d/du = -x d/dx.
* The exponential twist by c tensors with the rank-one module on which
  x^2 d/dx acts as +c (equivalently x d/dx acts as c/x).  Twisting by c and
  then by -c is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (DimensionMismatch, IrregularSingularity,
                     RamificationRequired)
from .exact.laurent import LaurentMatrix, LaurentPoly
from .exact.lattice import Lattice, poly_hnf_columns
from .exact.linalg import (Subspace, kernel_basis, mat_inv, mat_mul, qmat,
                           rational_eigendata)

Q = Fraction


class MeroConnection:
    """Finite-rank module over C[x,1/x] with a derivation matrix."""

    def __init__(self, matrix, variable="theta", derivation="euler"):
        if matrix.rows != matrix.cols:
            raise DimensionMismatch("derivation matrix must be square")
        if derivation not in ("euler", "z2dz"):
            raise ValueError(f"unknown derivation {derivation!r}")
        self.matrix = matrix
        self.variable = variable
        self.derivation = derivation

    @property
    def rank(self):
        return self.matrix.rows

    def euler_matrix(self):
        """The x d/dx matrix."""
        if self.derivation == "euler":
            return self.matrix
        return self.matrix.scale_monomial(-1)

    def z2dz_matrix(self):
        if self.derivation == "z2dz":
            return self.matrix
        return self.matrix.scale_monomial(1)

    def as_euler(self):
        return MeroConnection(self.euler_matrix(), self.variable, "euler")

    def apply(self, vec, derivation=None):
        """Apply the chosen derivation to a coefficient vector."""
        derivation = derivation or self.derivation
        a = self.euler_matrix() if derivation == "euler" else \
            self.z2dz_matrix()
        if derivation == "euler":
            dv = [e.euler() for e in vec]
        else:
            dv = [e.deriv().shift(2) for e in vec]
        av = a.mul_vec(vec)
        return [x + y for x, y in zip(dv, av)]

    def gauge(self, p):
        """Connection matrix in the new basis e' = e . P."""
        pinv = laurent_mat_inv(p)
        a = self.euler_matrix()
        if self.derivation == "euler":
            dp = p.map_entries(lambda e: e.euler())
            new = pinv * (a * p + dp)
        else:
            dp = p.map_entries(lambda e: e.deriv().shift(2))
            new = pinv * (self.z2dz_matrix() * p + dp)
        return MeroConnection(new, self.variable, self.derivation)

    def flip_chart(self, new_variable=None):
        """Present the same connection in the coordinate u = 1/x.

        The Euler matrix changes by A(x) -> -A(1/u).
        """
        a = self.euler_matrix().flip_variable()
        a = a * Q(-1)
        return MeroConnection(a, new_variable or self.variable, "euler")

    def direct_sum(self, other):
        n, m = self.rank, other.rank
        a, b = self.euler_matrix(), other.euler_matrix()
        out = LaurentMatrix(n + m, n + m, variable=self.variable)
        for i in range(n):
            for j in range(n):
                out.m[i][j] = a.m[i][j]
        for i in range(m):
            for j in range(m):
                out.m[n + i][n + j] = b.m[i][j]
        return MeroConnection(out, self.variable, "euler")

    def to_json(self):
        return {
            "variable": self.variable,
            "derivation": self.derivation,
            "rank": self.rank,
            "entries": self.matrix.to_entries_json(),
        }

    @staticmethod
    def from_json(data):
        m = LaurentMatrix.from_entries_json(
            data["rank"], data["rank"], data["entries"], data["variable"])
        return MeroConnection(m, data["variable"], data["derivation"])

    def __repr__(self):
        return (f"MeroConnection(rank={self.rank}, var={self.variable!r}, "
                f"derivation={self.derivation!r})")


def laurent_mat_inv(p):
    """Inverse of a Laurent matrix whose determinant is c * x^k."""
    det = p.det()
    if len(det.c) != 1:
        raise DimensionMismatch(
            "matrix is not invertible over Laurent polynomials")
    (dexp, dcoef), = det.c.items()
    n = p.rows
    if n == 1:
        out = LaurentMatrix(1, 1, variable=p.variable)
        out.m[0][0] = LaurentPoly({-dexp: 1 / dcoef})
        return out
    cof = LaurentMatrix(n, n, variable=p.variable)
    for i in range(n):
        for j in range(n):
            sub = LaurentMatrix(n - 1, n - 1, [
                [p.m[r][c] for c in range(n) if c != j]
                for r in range(n) if r != i], p.variable)
            minor = sub.det()
            if (i + j) % 2:
                minor = -minor
            cof.m[j][i] = minor * LaurentPoly({-dexp: 1 / dcoef})
    return cof


def _local_euler_apply(conn, vec, point):
    """Apply the local Euler derivation u d/du at the given point."""
    out = conn.apply(vec, "euler")
    if point == "inf":
        out = [-e for e in out]
    return out


def _pole_order(conn, point):
    a = conn.euler_matrix()
    if point == "0":
        return max(0, -a.minexp())
    return max(0, a.maxexp())


def levelt_saturate(conn, lat, point="0"):
    """Minimal logarithmic saturation of a lattice at a regular point.

    Iterates L -> L + D(L) for the local Euler derivation; raises
    IrregularSingularity when the spec bound rank*(pole order + 1) is
    exceeded.
    """
    side = "0" if point == "0" else "inf"
    if lat.side != side:
        raise DimensionMismatch("lattice side does not match the point")
    bound = conn.rank * (_pole_order(conn, point) + 1)
    cur = lat
    for _ in range(bound + 1):
        gens = cur.basis_columns()
        new = Lattice.from_generators(
            gens + [_local_euler_apply(conn, g, point) for g in gens],
            conn.rank, conn.variable, side)
        if new == cur:
            return cur
        cur = new
    raise IrregularSingularity(
        f"saturation at {point} did not stabilize within {bound} steps")


def is_logarithmic(conn, lat, point="0"):
    return all(lat.contains_vector(_local_euler_apply(conn, g, point))
               for g in lat.basis_columns())


def connection_matrix_on(conn, lat, point="0"):
    """Matrix of the local Euler derivation u d/du in the lattice basis."""
    cols = lat.basis_columns()
    if len(cols) != conn.rank:
        raise DimensionMismatch("lattice is not full")
    b = LaurentMatrix(conn.rank, conn.rank, variable=conn.variable)
    for j, col in enumerate(cols):
        for i in range(conn.rank):
            b.m[i][j] = col[i]
    binv = laurent_mat_inv(b)
    images = [_local_euler_apply(conn, col, point) for col in cols]
    out = LaurentMatrix(conn.rank, conn.rank, variable=conn.variable)
    for j, img in enumerate(images):
        v = binv.mul_vec(img)
        for i in range(conn.rank):
            out.m[i][j] = v[i]
    return out


def residue_matrix(conn, lat, point="0"):
    """Residue of u d/du on L/uL for a logarithmic lattice."""
    a = connection_matrix_on(conn, lat, point)
    # in the local coordinate u the matrix must be polynomial
    if point == "0":
        if a.minexp() < 0:
            raise IrregularSingularity("lattice is not logarithmic")
        return a.coeff_matrix(0)
    if a.maxexp() > 0:
        raise IrregularSingularity("lattice is not logarithmic")
    return a.coeff_matrix(0)


@dataclass
class VFiltration:
    """Deligne/Kashiwara-Malgrange V-filtration at a regular singular point.

    Stored through an adapted lattice basis: column j carries a rational
    residue eigenvalue ``exponents[j]`` inside [window, window+1).  For any
    rational gamma,  V^gamma = span_{C[u]} { u^{ceil(gamma - lam_j)} b_j }.
    """
    conn: MeroConnection
    point: str
    window: Fraction
    basis: list                      # adapted basis columns (ambient vectors)
    exponents: list                  # eigenvalue per column, in window
    nilpotent_blocks: dict = field(default_factory=dict)

    @property
    def side(self):
        return "0" if self.point == "0" else "inf"

    @property
    def jumps(self):
        return sorted(set(self.exponents))

    def gr_dim(self, gamma):
        return sum(1 for lam in self.exponents
                   if (gamma - lam).denominator == 1)

    def lattice(self, gamma):
        gamma = Q(gamma)
        gens = []
        for col, lam in zip(self.basis, self.exponents):
            m = _ceil_q(gamma - lam)
            k = m if self.point == "0" else -m
            gens.append([e.shift(k) for e in col])
        return Lattice.from_generators(gens, self.conn.rank,
                                       self.conn.variable, self.side)

    def next_jump_above(self, gamma):
        """Smallest jump value (mod Z shifted) strictly greater than gamma."""
        gamma = Q(gamma)
        cands = []
        for lam in set(self.exponents):
            m = _ceil_q(gamma - lam)
            v = lam + m
            if v <= gamma:
                v += 1
            cands.append(v)
        return min(cands)

    def jump_values_near(self, lo, hi):
        out = set()
        for lam in set(self.exponents):
            k = _ceil_q(Q(lo) - lam)
            v = lam + k
            while v <= Q(hi):
                if v >= Q(lo):
                    out.add(v)
                v += 1
        return sorted(out)


def _ceil_q(x):
    return -((-x.numerator) // x.denominator)


def _block_diagonalize(res):
    """Constant base change grouping generalized eigenspaces.

    Returns (T, groups) with groups a list of (eigenvalue, size).
    """
    eig = rational_eigendata(res)
    cols = []
    groups = []
    for lam, space in eig:
        for v in space.basis:
            cols.append(list(v))
        groups.append((lam, space.dim))
    t = [list(col) for col in zip(*cols)]
    return t, groups


def v_filtration(conn, point="0", window=None):
    """V-filtration of a regular-singular connection at 0 or infinity.

    ``window`` is the lower edge w of the exponent window [w, w+1); default
    is chosen so the window is [-1/2, 1/2) ... actually w = -1/2 unless
    given.  Jumps are the residue eigenvalues of the Deligne lattice.
    """
    if window is None:
        window = Q(-1, 2)
    window = Q(window)
    side = "0" if point == "0" else "inf"
    lat = levelt_saturate(conn, Lattice.standard(conn.rank, conn.variable,
                                                 side), point)
    guard = 0
    while True:
        res = residue_matrix(conn, lat, point)
        t, groups = _block_diagonalize(res)
        tmat = LaurentMatrix.from_scalar(t, conn.variable)
        cols = lat.basis_columns()
        bmat = LaurentMatrix(conn.rank, conn.rank, variable=conn.variable)
        for j in range(conn.rank):
            for i in range(conn.rank):
                bmat.m[i][j] = cols[j][i]
        adapted = bmat * tmat
        # shear eigenvalue groups that sit outside the window by one step
        moved = False
        newcols = [adapted.column(j) for j in range(conn.rank)]
        idx = 0
        for lam, size in groups:
            if lam < window or lam >= window + 1:
                step = 1 if lam < window else -1
                k = step if point == "0" else -step
                for j in range(idx, idx + size):
                    newcols[j] = [e.shift(k) for e in newcols[j]]
                moved = True
            idx += size
        lat = Lattice.from_generators(newcols, conn.rank, conn.variable, side)
        if not moved:
            break
        guard += 1
        if guard > 64 * conn.rank * (_pole_order(conn, point) + 2):
            raise IrregularSingularity("window shearing did not terminate")
    # final adapted data: eigen-ordered basis columns with exponents
    res = residue_matrix(conn, lat, point)
    t, groups = _block_diagonalize(res)
    tmat = LaurentMatrix.from_scalar(t, conn.variable)
    cols = lat.basis_columns()
    bmat = LaurentMatrix(conn.rank, conn.rank, variable=conn.variable)
    for j in range(conn.rank):
        for i in range(conn.rank):
            bmat.m[i][j] = cols[j][i]
    adapted = bmat * tmat
    basis = [adapted.column(j) for j in range(conn.rank)]
    exponents = []
    nil = {}
    tinv = mat_inv(t)
    resg = mat_mul(mat_mul(tinv, res), t)
    idx = 0
    for lam, size in groups:
        exponents.extend([lam] * size)
        block = [[resg[idx + i][idx + j] - (lam if i == j else 0)
                  for j in range(size)] for i in range(size)]
        nil[lam] = block
        idx += size
    vf = VFiltration(conn, point, window, basis, exponents, nil)
    # postcondition: on gr_V^gamma the Euler operator acts with the sole
    # eigenvalue gamma; the residue restricted to each group must be
    # lam + nilpotent, which _block_diagonalize guarantees.
    return vf


def exp_twist(conn, c, variable=None):
    """Tensor with the rank-one twist on which x^2 d/dx acts as +c."""
    c = Q(c)
    a = conn.z2dz_matrix()
    out = a.copy()
    for i in range(conn.rank):
        out.m[i][i] = out.m[i][i] + LaurentPoly.const(c)
    twisted = MeroConnection(out, variable or conn.variable, "z2dz")
    return twisted if conn.derivation == "z2dz" else twisted.as_euler()


@dataclass
class FormalFactor:
    c: Fraction
    regular_part: MeroConnection          # z2dz presentation, truncated
    induced_lattice: Lattice
    truncation_order: int
    size: int


@dataclass
class FormalDecomposition:
    factors: list
    gauge: LaurentMatrix                  # full gauge T*(I + Theta_1 z + ...)
    truncation_order: int
    block_slices: list                    # list of (start, size)


def _sylvester_solve(a_block, b_block, rhs):
    """Solve A X - X B = rhs exactly (spectra of A and B disjoint)."""
    p, q = len(a_block), len(b_block)
    rows = []
    vec = []
    for i in range(p):
        for j in range(q):
            row = [Q(0)] * (p * q)
            for k in range(p):
                row[k * q + j] += a_block[i][k]
            for k in range(q):
                row[i * q + k] -= b_block[k][j]
            rows.append(row)
            vec.append(rhs[i][j])
    from .exact.linalg import solve_linear
    sol, kern = solve_linear(rows, vec)
    if sol is None:
        raise RamificationRequired("Sylvester system inconsistent")
    return [[sol[i * q + j] for j in range(q)] for i in range(p)]


def formal_decompose(conn, lat, order=None):
    """Unramified Levelt-Turrittin decomposition at z = 0, to finite order.

    ``conn`` must have slope <= 1 at z = 0, i.e. its z^2 d/dz matrix on the
    given lattice is polynomial in z.  Returns a FormalDecomposition whose
    factors have pairwise distinct exponential coefficients c_i, the
    eigenvalues of the constant term.
    """
    n = conn.rank
    if order is None:
        order = 4 * n + 4
    a = connection_matrix_on(conn, lat, "0")
    a = a.scale_monomial(1)         # z^2 d/dz matrix on the lattice
    if a.minexp() < 0:
        raise IrregularSingularity(
            "pole order exceeds two on the given lattice")
    a0 = a.coeff_matrix(0)
    t, groups = _block_diagonalize(a0)
    tinv = mat_inv(t)
    amats = [mat_mul(mat_mul(tinv, a.coeff_matrix(k)), t)
             for k in range(0, max(a.maxexp(), 0) + 1)]
    while len(amats) <= order:
        amats.append([[Q(0)] * n for _ in range(n)])
    slices = []
    start = 0
    for lam, size in groups:
        slices.append((start, size))
        start += size
    # order-by-order gauge Theta = I + sum Theta_k z^k, Theta_k off-block
    thetas = [None] * (order + 1)
    thetas[0] = [[Q(1) if i == j else Q(0) for j in range(n)]
                 for i in range(n)]
    cmats = [None] * (order + 1)
    cmats[0] = amats[0]
    for k in range(1, order + 1):
        rhs = [[Q(0)] * n for _ in range(n)]
        for b in range(0, k):
            ab = amats[k - b]
            tb = thetas[b]
            for i in range(n):
                for j in range(n):
                    rhs[i][j] += sum(ab[i][p] * tb[p][j] for p in range(n))
        for aa in range(1, k):
            ta = thetas[aa]
            cb = cmats[k - aa]
            for i in range(n):
                for j in range(n):
                    rhs[i][j] -= sum(ta[i][p] * cb[p][j] for p in range(n))
        for i in range(n):
            for j in range(n):
                rhs[i][j] -= (k - 1) * thetas[k - 1][i][j]
        # rhs + [A0, Theta_k] = C_k ; C_k block diagonal, Theta_k off-block
        theta_k = [[Q(0)] * n for _ in range(n)]
        c_k = [[Q(0)] * n for _ in range(n)]
        for bi, (si, szi) in enumerate(slices):
            for bj, (sj, szj) in enumerate(slices):
                sub = [[rhs[si + i][sj + j] for j in range(szj)]
                       for i in range(szi)]
                if bi == bj:
                    for i in range(szi):
                        for j in range(szj):
                            c_k[si + i][sj + j] = sub[i][j]
                else:
                    ai = [[amats[0][si + i][si + j] for j in range(szi)]
                          for i in range(szi)]
                    aj = [[amats[0][sj + i][sj + j] for j in range(szj)]
                          for i in range(szj)]
                    # A0 Theta - Theta A0 = -rhs on this block
                    x = _sylvester_solve(ai, aj,
                                         [[-sub[i][j] for j in range(szj)]
                                          for i in range(szi)])
                    for i in range(szi):
                        for j in range(szj):
                            theta_k[si + i][sj + j] = x[i][j]
        thetas[k] = theta_k
        cmats[k] = c_k
    # assemble factors
    var = conn.variable
    factors = []
    gauge_entries = [[LaurentPoly.zero() for _ in range(n)] for _ in range(n)]
    for k in range(order + 1):
        for i in range(n):
            for j in range(n):
                v = thetas[k][i][j]
                if v != 0:
                    gauge_entries[i][j] = gauge_entries[i][j] + \
                        LaurentPoly.monomial(k, v)
    theta_mat = LaurentMatrix(n, n, gauge_entries, var)
    tmat = LaurentMatrix.from_scalar(t, var)
    full_gauge = tmat * theta_mat
    # lattice generators in the new frame, truncated to the working order
    ginv = _truncated_inverse(theta_mat, order) * laurent_mat_inv(tmat)
    lat_cols = [ginv.mul_vec(col) for col in lat.basis_columns()]
    for (si, size), (lam, _) in zip(slices, groups):
        ents = [[LaurentPoly.zero() for _ in range(size)]
                for _ in range(size)]
        for k in range(order + 1):
            for i in range(size):
                for j in range(size):
                    v = cmats[k][si + i][si + j]
                    if i == j and k == 0:
                        v = v - lam
                    if v != 0:
                        ents[i][j] = ents[i][j] + LaurentPoly.monomial(k, v)
        reg = MeroConnection(LaurentMatrix(size, size, ents, var), var,
                             "z2dz")
        # regularity of the twisted-off block, tested by saturation
        try:
            levelt_saturate(reg, Lattice.standard(size, var, "0"), "0")
        except IrregularSingularity as exc:
            raise RamificationRequired(
                f"block at c={lam} stays irregular after its exponential "
                f"twist") from exc
        gens = []
        for col in lat_cols:
            piece = [col[si + i].truncate(-order, order)
                     for i in range(size)]
            gens.append(piece)
        ind = Lattice.from_generators(gens, size, var, "0")
        factors.append(FormalFactor(lam, reg, ind, order, size))
    assert sum(f.size for f in factors) == n
    return FormalDecomposition(factors, full_gauge, order, slices)


def _truncated_inverse(mat, order):
    """Inverse of I + N(z) (N with positive valuation), modulo z^{order+1}."""
    n = mat.rows
    ident = LaurentMatrix.identity(n, mat.variable)
    nmat = mat - ident
    out = ident
    power = ident
    for _ in range(order):
        power = (power * nmat).map_entries(
            lambda e: e.truncate(0, order))
        if power.is_zero():
            break
        out = out - power if _ % 2 == 0 else out + power
    return out.map_entries(lambda e: e.truncate(0, order))


def newton_polygon_slopes(conn, point="inf"):
    """Slopes of the Newton polygon at the point.

    The slope set of the module is the union of the slope sets of the
    cyclic submodules generated by the standard basis vectors, which
    together generate; each contributes the polygon of its minimal
    operator.  Returns a sorted list of distinct nonnegative Fractions,
    [0] for a regular singular point.
    """
    n = conn.rank
    local = conn if point == "0" else conn.flip_chart()

    def d_apply(vec):
        return local.apply(vec, "euler")

    slopes = set()
    for i in range(n):
        v = [LaurentPoly.zero()] * n
        v[i] = LaurentPoly.const(1)
        vecs = [v]
        for _ in range(n):
            vecs.append(d_apply(vecs[-1]))
        rel = _poly_relation(vecs, n)
        if rel is None:
            raise IrregularSingularity(
                "no polynomial relation found for a generator")
        slopes.update(_slopes_from_relation(rel))
    return sorted(slopes)


def _poly_relation(vecs, n):
    """Minimal-order polynomial relation sum b_j(u) vecs[j] = 0.

    Returns the list of b_j (LaurentPoly, polynomial) for the relation with
    b_last != 0 of least order, or None when the first n vectors are
    dependent in a degenerate way.
    """
    for order in range(1, len(vecs)):
        cols = vecs[: order + 1]
        shift = min((e.minexp() for col in cols for e in col
                     if not e.is_zero()), default=0)
        cols = [[e.shift(-shift) for e in col] for col in cols]
        maxdeg = max((e.maxexp() for col in cols for e in col
                      if not e.is_zero()), default=0)
        kmax = (order + 1) * (maxdeg + 1) + 2
        unknown_cols = []
        for col in cols:
            for k in range(kmax + 1):
                unknown_cols.append([e.shift(k) for e in col])
        exps = sorted({e for col in unknown_cols for ee in col
                       for e in ee.c})
        pos = {e: i for i, e in enumerate(exps)}
        rows = [[Q(0)] * len(unknown_cols) for _ in range(len(exps) * n)]
        for j, col in enumerate(unknown_cols):
            for i, ee in enumerate(col):
                for e, val in ee.c.items():
                    rows[pos[e] * n + i][j] = val
        kern = kernel_basis(rows)
        for kv in kern:
            bs = []
            for jj in range(order + 1):
                poly = LaurentPoly({k: kv[jj * (kmax + 1) + k]
                                    for k in range(kmax + 1)})
                bs.append(poly)
            if not bs[order].is_zero():
                return bs
    return None


def _slopes_from_relation(bs):
    pts = [(j, b.minexp()) for j, b in enumerate(bs) if not b.is_zero()]
    # lower convex hull from the right; slopes (ord_right-ord_left)/(dj)
    pts.sort()
    slopes = set()
    j2, o2 = pts[-1]
    rest = pts[:-1]
    while rest:
        best = None
        best_slope = None
        for j1, o1 in rest:
            s = Q(o2 - o1, j2 - j1)
            if best_slope is None or s > best_slope or \
                    (s == best_slope and j1 < best[0]):
                best_slope = s
                best = (j1, o1)
        slopes.add(max(Q(0), best_slope))
        j2, o2 = best
        rest = [p for p in rest if p[0] < j2]
    return sorted(slopes) if slopes else [Q(0)]


def check_no_ramification(conn, point="inf", probe_order=4):
    """Report whether the Levelt-Turrittin decomposition needs no ramification.

    True iff all Newton-polygon slopes at the irregular point lie in {0, 1}
    and a small-order formal decomposition succeeds.
    """
    report = {"ok": False, "slopes": [], "detail": ""}
    try:
        slopes = newton_polygon_slopes(conn, point)
    except IrregularSingularity as exc:
        report["detail"] = str(exc)
        return report
    report["slopes"] = slopes
    if any(s not in (Q(0), Q(1)) for s in slopes):
        report["detail"] = "slope outside {0,1}"
        return report
    local = conn if point == "0" else conn.flip_chart()
    try:
        sat = _slope_one_lattice(local)
        formal_decompose(local, sat, probe_order)
    except (RamificationRequired, IrregularSingularity) as exc:
        report["detail"] = f"formal decomposition failed: {exc}"
        return report
    report["ok"] = True
    return report


def _slope_one_lattice(local_conn):
    """A lattice on which the z^2 d/dz matrix is polynomial, by saturation
    under the z^2 d/dz operator."""
    n = local_conn.rank
    var = local_conn.variable
    lat = Lattice.standard(n, var, "0")
    bound = 2 * n * (_pole_order(local_conn, "0") + 2)
    def d_apply(vec):
        return local_conn.apply(vec, "z2dz")
    for _ in range(bound + 1):
        gens = lat.basis_columns()
        new = Lattice.from_generators(
            gens + [d_apply(g) for g in gens], n, var, "0")
        if new == lat:
            return lat
        lat = new
    raise IrregularSingularity("slope exceeds one: z^2 d/dz saturation "
                               "does not stabilize")
