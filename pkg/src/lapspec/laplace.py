"""Filtered regular holonomic modules on the affine line and their Laplace
transforms: Brieskorn lattices, local V-data, Deligne filtration lattices.

The cyclic module M = C[t]<d_t>/(P) is handled through normal forms: classes
of operators reduce to vectors of rational functions over the basis
[1], [d], ..., [d^{m-1}].  The Laplace transform applies the substitution
t -> -d_theta, d_t -> theta and runs the same normal-form machinery on the
theta side, followed by a basis closure that yields a free C[theta, 1/theta]
presentation with poles only at 0 and infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import weyl as W
from .errors import (ApparentSingularityResidue, HypothesisViolation,
                     IrrationalEigenvalue, IrregularSingularity,
                     NonRegularAtInfinity, ParseError)
from .exact.laurent import LaurentMatrix, LaurentPoly
from .exact.lattice import Lattice, poly_hnf_columns
from .exact.linalg import Subspace
from .exact.ratfunc import RatFunc, poly_gcd
from .meroconn import MeroConnection, levelt_saturate, v_filtration

Q = Fraction


class CyclicNormalForms:
    """Normal forms for D/(P) over the basis [1], [d], ..., [d^{m-1}]."""

    def __init__(self, op):
        self.op = op
        self.m = W.d_order(op)
        if self.m < 0:
            raise ParseError("zero operator")
        self.lead = LaurentPoly(W.coeff_of_d(op, self.m))
        self.lower = [LaurentPoly(W.coeff_of_d(op, j)) for j in range(self.m)]

    def zero_vec(self):
        return [RatFunc.zero() for _ in range(self.m)]

    def basis_vec(self, j):
        v = self.zero_vec()
        v[j] = RatFunc.const(1)
        return v

    def d_action(self, vec):
        """Class of d * (sum vec_k d^k)."""
        m = self.m
        out = [v.deriv() for v in vec]
        top = vec[m - 1] if m else RatFunc.zero()
        for k in range(m - 1, 0, -1):
            out[k] = out[k] + vec[k - 1]
        if m and not top.is_zero():
            lead = RatFunc(self.lead)
            for k in range(m):
                out[k] = out[k] - top * RatFunc(self.lower[k]) / lead
        return out

    def x_action(self, vec):
        """Class of x * (sum vec_k d^k): x d^k = d^k x - k d^{k-1}."""
        x = RatFunc(LaurentPoly.monomial(1, 1))
        out = [v * x for v in vec]
        for k in range(1, self.m):
            out[k - 1] = out[k - 1] - vec[k] * Q(k)
        return out

    def scalar_mul(self, vec, rf):
        return [v * rf for v in vec]

    def nf(self, op):
        """Normal-form vector of a Weyl-algebra class."""
        dpows = [self.basis_vec(0)] if self.m else [self.zero_vec()]
        maxj = W.d_order(op)
        for _ in range(max(0, maxj)):
            dpows.append(self.d_action(dpows[-1]))
        out = self.zero_vec()
        for (i, j), v in op.items():
            term = dpows[j]
            for _ in range(i):
                term = self.x_action(term)
            for k in range(self.m):
                out[k] = out[k] + term[k] * v
        return out

    def euler_action(self, vec):
        return self.x_action(self.d_action(vec))

    def euler_matrix_on_standard(self):
        """Euler matrix x d/dx on the standard basis, when Laurent."""
        cols = []
        for j in range(self.m):
            img = self.euler_action(self.basis_vec(j))
            col = []
            for v in img:
                if not (v.is_zero() or v.is_laurent()):
                    return None
                col.append(v.as_laurent() if not v.is_zero()
                           else LaurentPoly.zero())
            cols.append(col)
        mat = LaurentMatrix(self.m, self.m, variable="x")
        for j, col in enumerate(cols):
            for i in range(self.m):
                mat.m[i][j] = col[i]
        return mat


def euler_rewrite(op):
    """Rewrite sum a_ij x^i d^j as sum f_b(x) (x d)^b with Laurent f_b.

    Uses d^j = x^{-j} (xd)(xd-1)...(xd-j+1).
    """
    # (xd)(xd-1)...(xd-j+1) expanded in powers of (xd): Stirling numbers
    out = {}
    for (i, j), v in op.items():
        poly = {0: Q(1)}
        for s in range(j):
            nxt = {}
            for b, c in poly.items():
                nxt[b + 1] = nxt.get(b + 1, Q(0)) + c
                if s:
                    nxt[b] = nxt.get(b, Q(0)) - s * c
            poly = nxt
        for b, c in poly.items():
            key = (i - j, b)
            out[key] = out.get(key, Q(0)) + v * c
    # collect per euler power
    coeffs = {}
    for (e, b), v in out.items():
        if v:
            coeffs.setdefault(b, {})[e] = coeffs.get(b, {}).get(e, Q(0)) + v
    return {b: LaurentPoly(c) for b, c in coeffs.items()
            if any(x != 0 for x in c.values())}


def fuchs_regular_report(op):
    """Regularity at every finite singular point and at infinity."""
    m = W.d_order(op)
    lead = LaurentPoly(W.coeff_of_d(op, m))
    report = {"finite": True, "infinity": True, "points": []}
    pts, extra = _rational_roots_of_poly(lead)
    if extra:
        report["finite"] = False
        report["points"].append(("non-rational singular locus", None))
    for c, _mult in pts:
        ordc = _poly_val_at(lead, c)
        ok = True
        for j in range(m):
            cj = LaurentPoly(W.coeff_of_d(op, j))
            if cj.is_zero():
                continue
            if _poly_val_at(cj, c) < ordc - (m - j):
                ok = False
        report["points"].append((c, ok))
        report["finite"] = report["finite"] and ok
    ecf = euler_rewrite(op)
    top = max(ecf)
    dtop = ecf[top].maxexp()
    for b, f in ecf.items():
        if f.maxexp() > dtop:
            report["infinity"] = False
    report["ok"] = report["finite"] and report["infinity"]
    return report


def _rational_roots_of_poly(poly, include_zero=True):
    """(rational roots with multiplicity, degree of the non-rational part).

    For a Laurent polynomial the zero root carries multiplicity equal to the
    valuation at 0 (only reported when positive).
    """
    from .exact.linalg import rational_roots
    if poly.is_zero():
        raise ParseError("zero polynomial has no well-defined roots")
    shift = poly.minexp()
    p = poly.shift(-shift)
    coeffs = [p.coeff(k) for k in range(p.maxexp() + 1)]
    roots, _full = rational_roots(coeffs)
    roots = [(r, m) for r, m in roots if r != 0]
    deg_rational = sum(m for _, m in roots)
    extra = p.maxexp() - deg_rational
    if include_zero and shift > 0:
        roots.append((Q(0), shift))
        roots.sort()
    return roots, extra


def _poly_val_at(poly, c):
    from .exact.ratfunc import _val
    return _val(poly, c)


@dataclass
class FilteredDModule:
    """Cyclic presentation of M with a good-filtration specification."""

    operator: dict
    filtration_mode: str = "unitary"          # "unitary" | "explicit"
    explicit_steps: list = field(default_factory=list)  # [(p, [weyl dict])]
    generation_index: int = 0
    check_regular: bool = True

    def __post_init__(self):
        self.operator = W.weyl(self.operator)
        if not self.operator:
            raise ParseError("operator P must be nonzero")
        self.nfm = CyclicNormalForms(self.operator)
        if self.check_regular:
            rep = fuchs_regular_report(self.operator)
            if not rep["ok"]:
                raise NonRegularAtInfinity(
                    f"operator is not regular everywhere: {rep}")

    @property
    def d_order(self):
        return self.nfm.m

    def singular_points(self):
        roots, extra = _rational_roots_of_poly(self.nfm.lead)
        if extra:
            raise IrrationalEigenvalue(
                "singular locus has non-rational points")
        return sorted(r for r, _ in roots)

    def t_degree(self):
        return W.x_degree(self.operator)

    @staticmethod
    def from_json(data):
        op = W.weyl([(int(i), int(j), Q(a)) for i, j, a in data["operator"]])
        filt = data.get("filtration", {"mode": "unitary"})
        mode = filt.get("mode", "unitary")
        steps = []
        if mode == "explicit":
            for p, gens in filt["steps"]:
                steps.append((int(p), [W.weyl_from_json(g) for g in gens]))
        return FilteredDModule(op, mode, steps,
                               int(filt.get("p0", 0)))

    def to_json(self):
        out = {"operator": W.weyl_to_json(self.operator),
               "filtration": {"mode": self.filtration_mode}}
        if self.filtration_mode == "explicit":
            out["filtration"]["steps"] = [
                [p, [W.weyl_to_json(g) for g in gens]]
                for p, gens in self.explicit_steps]
            out["filtration"]["p0"] = self.generation_index
        return out


# -- local V-data ----------------------------------------------------------


@dataclass
class PointVData:
    point: Fraction
    exponents: list            # V-jumps of the local lattice data
    generator_note: str = ""


def v_filtration_at_point(module, c):
    """V-filtration data of M at a finite regular singular point t = c."""
    c = Q(c)
    m = module.d_order
    if m == 1:
        lead = module.nfm.lead
        low = module.nfm.lower[0]
        # connection form: d[1] = (-c_0/c_1)[1]
        form = RatFunc(low, reduce=True) / RatFunc(lead)
        form = -form
        val = form.valuation_at(c)
        if val is not None and val < -1:
            raise IrregularSingularity(
                f"pole of order {-val} at t={c} in a rank-1 module")
        alpha = _residue_at(form, c)
        return PointVData(c, [alpha],
                          "class [1] has local degree alpha")
    pts = module.singular_points()
    others = [p for p in pts if p != c]
    if others:
        raise HypothesisViolation(
            "general local V-data at one of several singular points is "
            "implemented only for d-order 1 modules")
    shifted = {(0, 0): Q(1)}
    # substitute t -> t + c in the operator
    op2 = {}
    for (i, j), v in module.operator.items():
        # (t + c)^i expansion
        from math import comb
        for k in range(i + 1):
            key = (k, j)
            op2[key] = op2.get(key, Q(0)) + v * comb(i, k) * c ** (i - k)
    op2 = {k: v for k, v in op2.items() if v != 0}
    nfm = CyclicNormalForms(op2)
    euler = nfm.euler_matrix_on_standard()
    if euler is None:
        raise HypothesisViolation(
            "companion connection is not Laurent at the point")
    conn = MeroConnection(euler, "t", "euler")
    vf = v_filtration(conn, "0")
    return PointVData(c, vf.jumps, "companion-system jumps in the default "
                      "window")


def _residue_at(form, c):
    """Residue of a rational 1-form coefficient with at most simple pole."""
    c = Q(c)
    shifted = RatFunc(_shift_poly(form.num, c), _shift_poly(form.den, c))
    ser = shifted.series_coeff(-1, -1)
    return ser[-1]


def _shift_poly(p, c):
    from .exact.ratfunc import _poly_shift_arg
    return _poly_shift_arg(p, c)


# -- unitary filtration ------------------------------------------------------


def unitary_filtration(module):
    """Hodge filtration of a unitary-type minimal extension.

    F^0 is the intersection over the finite singular points of the local
    V^{>-1} submodules, F^1 = 0, deeper steps by derivative generation;
    the generation index is 0.  Returns (generators of F^0 as Weyl
    elements, diagnostics dict).
    """
    m = module.d_order
    diag = {"degenerate": False, "exponents": {}}
    pts = module.singular_points()
    if not pts and m == 1:
        diag["degenerate"] = True
        return [{(0, 0): Q(1)}], diag
    if m == 1:
        lead = module.nfm.lead
        low = module.nfm.lower[0]
        form = -(RatFunc(low) / RatFunc(lead))
        red_den = form.den                     # reduced denominator
        for c in pts:
            alpha = _residue_at(form, c)
            diag["exponents"][c] = alpha
            if not (0 < alpha < 1):
                raise HypothesisViolation(
                    f"exponent {alpha} at t={c} outside (0,1)")
        # Bezout: u * den + v * num = 1 with form = num/den in lowest terms
        g, u, v = _poly_xgcd(red_den, form.num)
        if not (g.is_const() and not g.is_zero()):
            raise HypothesisViolation("numerator and denominator share a "
                                      "factor; extension is not minimal")
        scale = Q(1) / g.const_value()
        # class u + v*d has normal form (u*den + v*num)/den = 1/den
        gen = {}
        for e in range(u.maxexp() + 1):
            if u.coeff(e):
                gen[(e, 0)] = u.coeff(e) * scale
        for e in range(v.maxexp() + 1):
            if v.coeff(e):
                gen[(e, 1)] = gen.get((e, 1), Q(0)) + v.coeff(e) * scale
        return [W.weyl(gen)], diag
    if len(pts) > 1:
        raise HypothesisViolation(
            "unitary filtration for d-order >= 2 needs a single finite "
            "singular point in this implementation")
    c = pts[0] if pts else Q(0)
    vdata_conn = _companion_connection_at(module, c)
    vf = v_filtration(vdata_conn, "0", window=Q(-1))
    for lam in vf.jumps:
        diag["exponents"].setdefault(c, []).append(lam + 1)
    lat = vf.lattice(vf.next_jump_above(Q(-1)))
    gens = []
    for col in lat.basis_columns():
        gens.append(_weyl_from_nf_vector(module, col, c))
    return gens, diag


def _companion_connection_at(module, c):
    op2 = {}
    from math import comb
    for (i, j), v in module.operator.items():
        for k in range(i + 1):
            key = (k, j)
            op2[key] = op2.get(key, Q(0)) + v * comb(i, k) * c ** (i - k)
    nfm = CyclicNormalForms({k: v for k, v in op2.items() if v != 0})
    euler = nfm.euler_matrix_on_standard()
    if euler is None:
        raise HypothesisViolation("connection is not Laurent at the point")
    return MeroConnection(euler, "t", "euler")


def _weyl_from_nf_vector(module, col, c):
    """Weyl element whose class at t = c + s has the given [d^k]-vector."""
    out = {}
    for k, e in enumerate(col):
        for exp, v in e.c.items():
            if exp < 0:
                raise HypothesisViolation(
                    "cannot lift a local V-generator with poles back to an "
                    "operator class")
            # (t - c)^exp d^k
            from math import comb
            for a in range(exp + 1):
                key = (a, k)
                out[key] = out.get(key, Q(0)) + \
                    v * comb(exp, a) * (-c) ** (exp - a)
    return W.weyl(out)


def _poly_xgcd(a, b):
    """Extended gcd of polynomial LaurentPoly: returns (g, u, v) with
    u*a + v*b = g, g monic."""
    r0, r1 = a, b
    u0, u1 = LaurentPoly.const(1), LaurentPoly.zero()
    v0, v1 = LaurentPoly.zero(), LaurentPoly.const(1)
    while not r1.is_zero():
        q, r = r0.divmod_poly(r1)
        r0, r1 = r1, r
        u0, u1 = u1, u0 - q * u1
        v0, v1 = v1, v0 - q * v1
    if r0.is_zero():
        return r0, u0, v0
    lead = r0.c[r0.maxexp()]
    inv = Q(1) / lead
    return r0.scale(inv), u0.scale(inv), v0.scale(inv)


# -- Laplace transform -------------------------------------------------------


@dataclass
class LaplaceData:
    """The transform G with a distinguished free basis.

    ``conn`` presents theta*d/dtheta on the basis; ``basis`` holds the
    normal-form vectors (RatFunc, over [1],[d],..) of the basis columns;
    ``nfm`` is the theta-side normal-form engine; ``t_matrix`` is the
    action of t (= -d_theta) on the basis.
    """
    conn: MeroConnection
    basis: list
    nfm: CyclicNormalForms
    t_matrix: LaurentMatrix
    rank: int
    degenerate: bool = False


def laplace_transform(module, max_steps=None):
    phat = W.laplace_substitute(module.operator)
    nfm = CyclicNormalForms(phat)
    n = nfm.m
    if n == 0:
        # G = 0: the class of 1 is killed by an invertible function of theta
        return LaplaceData(
            MeroConnection(LaurentMatrix(0, 0, variable="theta"), "theta",
                           "euler"), [], nfm,
            LaurentMatrix(0, 0, variable="theta"), 0, degenerate=True)
    if max_steps is None:
        max_steps = 4 * (n + nfm.lead.maxexp() + 4)
    gens = [nfm.basis_vec(j) for j in range(n)]
    frontier = nfm.basis_vec(n - 1)
    basis_cols, pivots, den = _s_lattice(gens)
    steps = 0
    while True:
        frontier = nfm.d_action(frontier)
        if _s_member(basis_cols, pivots, den, frontier):
            break
        gens.append(frontier)
        basis_cols, pivots, den = _s_lattice(gens)
        steps += 1
        if steps > max_steps:
            raise ApparentSingularityResidue(
                "basis closure for the Laplace transform did not stabilize; "
                "the input is outside the regular class")
    rank = len(basis_cols)
    # distinguished basis: (1/den) * columns
    basis = []
    for col in basis_cols:
        basis.append([RatFunc(e, den) for e in col])
    amat = _matrix_of(nfm.euler_action, basis, "theta")
    tmat = _matrix_of(lambda v: [(-x) for x in _d_only(nfm, v)], basis,
                      "theta")
    conn = MeroConnection(amat, "theta", "euler")
    # the transform of a regular module is regular at theta = 0
    try:
        levelt_saturate(conn, Lattice.standard(rank, "theta", "0"), "0")
    except IrregularSingularity as exc:
        raise ApparentSingularityResidue(
            "transform is irregular at theta = 0") from exc
    return LaplaceData(conn, basis, nfm, tmat, rank)


def _d_only(nfm, vec):
    return nfm.d_action(vec)


def _matrix_of(action, basis, var):
    """Matrix of a C-linear action in a RatFunc basis; entries must be
    Laurent."""
    n = len(basis)
    cols = []
    for b in basis:
        img = action(b)
        coords = _rf_coordinates(basis, img)
        if coords is None:
            raise ApparentSingularityResidue(
                "action does not preserve the distinguished basis span")
        col = []
        for c in coords:
            if c.is_zero():
                col.append(LaurentPoly.zero())
            elif c.is_laurent():
                col.append(c.as_laurent())
            else:
                raise ApparentSingularityResidue(
                    "non-Laurent coordinate: t-action leaves the free basis")
        cols.append(col)
    mat = LaurentMatrix(n, n, variable=var)
    for j, col in enumerate(cols):
        for i in range(n):
            mat.m[i][j] = col[i]
    return mat


def _s_lattice(gens):
    """C[theta]-lattice data for the span of RatFunc vectors.

    Returns (hnf columns, pivot rows, common denominator poly); theta powers
    in denominators are units and are cleared into the columns.
    """
    n = len(gens[0])
    den = LaurentPoly.const(1)
    for g in gens:
        for e in g:
            if not e.is_zero():
                d = _strip_theta(e.den)
                den = den * _poly_div_gcd(d, poly_gcd(den, d))
    cols = []
    for g in gens:
        col = []
        for e in g:
            prod = e * RatFunc(den)
            if prod.is_zero():
                col.append(LaurentPoly.zero())
            else:
                assert prod.is_laurent(), "unexpected non-unit denominator"
                col.append(prod.as_laurent())
        cols.append(col)
    shift = min((e.minexp() for col in cols for e in col
                 if not e.is_zero()), default=0)
    cols = [[e.shift(-shift) for e in col] for col in cols]
    basis, pivots = poly_hnf_columns(cols, n)
    return basis, pivots, den


def _strip_theta(poly):
    return poly.shift(-poly.minexp())


def _poly_div_gcd(a, b):
    q, r = a.divmod_poly(b)
    assert r.is_zero()
    return q


def _s_member(basis_cols, pivots, den, vec):
    """Is the RatFunc vector in the C[theta,1/theta]-span of basis/den?"""
    target = [e * RatFunc(den) for e in vec]
    work = []
    for e in target:
        if e.is_zero():
            work.append(LaurentPoly.zero())
        elif e.is_laurent():
            work.append(e.as_laurent())
        else:
            return False
    for col, r in zip(basis_cols, pivots):
        if work[r].is_zero():
            continue
        q = _laurent_div(work[r], col[r])
        if q is None:
            return False
        work = [w - q * c for w, c in zip(work, col)]
    return all(w.is_zero() for w in work)


def _laurent_div(a, b):
    """Exact quotient of Laurent polynomials, or None."""
    if a.is_zero():
        return LaurentPoly.zero()
    sa, sb = a.minexp(), b.minexp()
    q, r = a.shift(-sa).divmod_poly(b.shift(-sb))
    if not r.is_zero():
        return None
    return q.shift(sa - sb)


def _rf_coordinates(basis, vec):
    """Coordinates of vec in a triangular-ish RatFunc basis by elimination."""
    n = len(basis)
    m = len(vec)
    # Gaussian elimination over the rational function field
    rows = [[basis[j][i] for j in range(n)] + [vec[i]] for i in range(m)]
    coords = [RatFunc.zero()] * n
    used_rows = []
    pivcols = []
    r = 0
    for c in range(n):
        pr = None
        for i in range(r, m):
            if not rows[i][c].is_zero():
                pr = i
                break
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        pivot = rows[r][c]
        rows[r] = [x / pivot for x in rows[r]]
        for i in range(m):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivcols.append(c)
        r += 1
    for i in range(r, m):
        if not rows[i][-1].is_zero():
            return None
    for row, c in zip(rows[:r], pivcols):
        coords[c] = row[-1]
    return coords


# -- Brieskorn lattice --------------------------------------------------------


def filtration_generators(module):
    """Weyl generators of F^{p0} and the generation index p0."""
    if module.filtration_mode == "unitary":
        gens, diag = unitary_filtration(module)
        return gens, 0, diag
    steps = sorted(module.explicit_steps, key=lambda s: -s[0])
    p0 = module.generation_index
    for p, gens in steps:
        if p == p0:
            return gens, p0, {}
    raise ParseError("explicit filtration must specify the step at p0")


def brieskorn(module, lap=None, p0_override=None, max_rounds=None):
    """The Brieskorn lattice of the good filtration as a LatticePair.

    Closes the span of the localized filtration generators under theta'
    and t; the t-closure loop doubles its budget on non-stabilization and
    fails hard after four doublings.
    """
    from .spectra import LatticePair

    lap = lap or laplace_transform(module)
    if lap.degenerate:
        return LatticePair(lap.conn,
                           Lattice.standard(0, "theta", "inf"),
                           validate=False), lap
    gens_weyl, p0, _diag = filtration_generators(module)
    if p0_override is not None:
        gens_weyl, p0 = p0_override
    cols = []
    for g in gens_weyl:
        ghat = W.laplace_substitute(g)
        v = lap.nfm.nf(ghat)
        coords = _rf_coordinates(lap.basis, v)
        if coords is None:
            raise ApparentSingularityResidue("filtration generator does not "
                                             "lie in the free span")
        col = []
        for c in coords:
            if c.is_zero():
                col.append(LaurentPoly.zero())
            elif c.is_laurent():
                col.append(c.as_laurent())
            else:
                raise ApparentSingularityResidue(
                    "filtration generator has a non-Laurent coordinate")
        cols.append(col)

    conn = lap.conn

    def t_apply(vec):
        img = conn.apply(vec, "euler")
        return [-e.shift(-1) for e in img]

    lat = Lattice.from_generators(cols, lap.rank, "theta", "inf")
    budget = max_rounds or max(8, 4 * lap.rank)
    doublings = 0
    rounds = 0
    while True:
        gens = lat.basis_columns()
        new = Lattice.from_generators(gens + [t_apply(g) for g in gens],
                                      lap.rank, "theta", "inf")
        if new == lat:
            break
        lat = new
        rounds += 1
        if rounds > budget:
            if doublings >= 4:
                raise NonRegularAtInfinity(
                    "Brieskorn t-closure did not stabilize")
            budget *= 2
            doublings += 1
    g0 = lat.scaled_by_var_power(p0)
    return LatticePair(conn, g0), lap


def u_matrix(pair, module=None):
    """Matrix of t on G0 / theta' G0; eigenvalues are the singular points."""
    tm = pair.t_matrix_on_g0()
    u = tm.coeff_matrix(0)
    if module is not None:
        from .exact.linalg import rational_roots
        cp = _charpoly_q(u)
        roots, split = rational_roots(cp)
        if not split:
            raise IrrationalEigenvalue("U has a non-rational eigenvalue")
        got = sorted(r for r, m in roots for _ in range(m))
        pts = module.singular_points()
        if sorted(set(got)) != sorted(set(pts)):
            raise ApparentSingularityResidue(
                f"U-spectrum {got} does not match singular points {pts}")
    return u


def _charpoly_q(mat):
    from .exact.linalg import charpoly
    return charpoly([[Q(x) for x in row] for row in mat])


# -- Deligne filtration -------------------------------------------------------


@dataclass
class DeligneLattice:
    gamma: Fraction
    lattice: object = None            # exact.Lattice over C[x] (x = 1/t)
    generator_valuation: int = None   # principal-ideal form, multi-point m=1
    note: str = ""

    def is_zero(self):
        return self.lattice is None and self.generator_valuation is None


def _x_chart_connection(module):
    euler = module.nfm.euler_matrix_on_standard()
    if euler is None:
        raise HypothesisViolation(
            "companion connection is not Laurent; multiple finite singular "
            "points need the rank-one path")
    conn = MeroConnection(euler, "t", "euler")
    return conn.flip_chart("x")


def _v_infinity_lattices(module):
    """V-filtration of the meromorphic extension at infinity (x = 1/t).

    Returns a VFiltration in the x-chart whose ambient frame is the
    normal-form basis [1], [d], ..., with entries Laurent in x.
    """
    conn_x = _x_chart_connection(module)
    return v_filtration(conn_x, "0")


def _infinity_exponent_rank1(module):
    """Sum of the finite exponents: the V-degree of [1] at infinity is
    minus this sum for a rank-one module."""
    lead = module.nfm.lead
    low = module.nfm.lower[0]
    form = -(RatFunc(low) / RatFunc(lead))
    total = Q(0)
    for c in module.singular_points():
        total += _residue_at(form, c)
    return total


def _ceil_q(x):
    return -((-x.numerator) // x.denominator)


def deligne_filtration_lattice(module, gamma):
    """F_Del^gamma of the exponentially twisted module, in the chart at
    infinity: the span of (d_x + x^{-2})^k x^{-1} F^{[gamma]+k} V^beta
    over k >= 0, with beta = gamma - [gamma].

    Implemented for one-jump unitary filtrations (F^0 generates, F^1 = 0).
    """
    gamma = Q(gamma)
    if module.filtration_mode != "unitary":
        raise HypothesisViolation("Deligne lattices are implemented for "
                                  "unitary-type filtrations")
    ceil_g = _ceil_q(gamma)
    beta = gamma - ceil_g
    kmax = -ceil_g
    if kmax < 0:
        return DeligneLattice(gamma, note="zero lattice")
    m = module.d_order
    pts = module.singular_points()
    single = len(pts) <= 1
    nfm = module.nfm
    if single:
        vf = _v_infinity_lattices(module)
        vlat = vf.lattice(beta)
        vgens = []
        for col in vlat.basis_columns():
            vgens.append([e.flip() for e in col])     # back to t-Laurent
        gens = []
        for w in vgens:
            cur = nfm.x_action(_rf_vec(w))            # x^{-1} w = t * w
            for k in range(kmax + 1):
                gens.append(cur)
                cur = _dx_plus_xm2(nfm, cur)
        lat_gens = []
        for g in gens:
            col = []
            for e in g:
                if e.is_zero():
                    col.append(LaurentPoly.zero())
                elif e.is_laurent():
                    col.append(e.as_laurent())
                else:
                    raise HypothesisViolation(
                        "non-Laurent section in a single-singularity module")
            lat_gens.append(col)
        lat = Lattice.from_generators(lat_gens, m, "t", "inf")
        return DeligneLattice(gamma, lattice=lat)
    if m != 1:
        raise HypothesisViolation(
            "multi-point Deligne lattices are implemented for d-order one")
    rho = _infinity_exponent_rank1(module)
    # V^beta at infinity: x-valuation >= ceil(beta + rho); the F-pieces are
    # full for nonpositive level, so the k-sum is the single-step recursion
    # on x-valuations: (d_x + x^{-2}) lowers the valuation by exactly 2 on
    # V-sections (x^2 d_x + 1 is invertible there).
    val = _ceil_q(beta + rho)
    v0 = val - 1                     # x^{-1} * V^beta
    result_val = v0 - 2 * kmax
    return DeligneLattice(gamma, generator_valuation=result_val,
                          note="principal module x^v * (local sections)")


def _rf_vec(col):
    return [RatFunc(e) for e in col]


def _dx_plus_xm2(nfm, vec):
    """(d_x + x^{-2}) acting on normal-form vectors; d_x = -t^2 d_t."""
    dvec = nfm.d_action(vec)
    dvec = nfm.x_action(nfm.x_action(dvec))
    out = [(-a) + b for a, b in
           zip(dvec, nfm.x_action(nfm.x_action(vec)))]
    return out


def deligne_decreasing_check(module, gammas):
    """F_Del is decreasing: for gamma' >= gamma the lattice is contained."""
    pieces = [(g, deligne_filtration_lattice(module, g))
              for g in sorted(gammas)]
    for (g1, low), (g2, high) in zip(pieces, pieces[1:]):
        if high.is_zero():
            continue
        if low.is_zero():
            return False
        if high.lattice is not None:
            if not low.lattice.contains(high.lattice):
                return False
        else:
            if low.generator_valuation > high.generator_valuation:
                return False
    return True


def deligne_transversality_check(module, gamma):
    """(d_x + x^{-2}) F^gamma lies within F^{gamma-1}, on generators."""
    cur = deligne_filtration_lattice(module, gamma)
    lower = deligne_filtration_lattice(module, gamma - 1)
    if cur.is_zero():
        return True
    if cur.lattice is None:
        return lower.generator_valuation <= cur.generator_valuation - 2
    nfm = module.nfm
    for col in cur.lattice.basis_columns():
        img = _dx_plus_xm2(nfm, _rf_vec(col))
        img_col = []
        for e in img:
            img_col.append(e.as_laurent() if not e.is_zero()
                           else LaurentPoly.zero())
        if not lower.lattice.contains_vector(img_col):
            return False
    return True


# -- the Deligne filtration on G ----------------------------------------------


def _s_span_canonical(gens, n):
    """Canonical basis of a C[theta, 1/theta]-span of Laurent vectors.

    Columns are HNF-reduced over C[theta] and stripped of their individual
    theta-content (a unit operation over the Laurent ring) until stable.
    """
    cols = []
    for g in gens:
        if any(not e.is_zero() for e in g):
            mn = min(e.minexp() for e in g if not e.is_zero())
            cols.append([e.shift(-mn) for e in g])
    if not cols:
        return []
    while True:
        basis, _piv = poly_hnf_columns(cols, n)
        changed = False
        stripped = []
        for col in basis:
            mn = min(e.minexp() for e in col if not e.is_zero())
            if mn > 0:
                changed = True
            stripped.append([e.shift(-mn) for e in col])
        cols = stripped
        if not changed:
            return cols


@dataclass
class FDelPiece:
    gamma: Fraction
    span_basis: list                 # canonical Laurent-span basis vectors

    def key(self):
        return tuple(tuple(tuple(sorted(e.c.items())) for e in col)
                     for col in self.span_basis)


def fdel_on_g(pair, gamma):
    """F_Del^gamma G = C[theta,1/theta] . (G0 ^ V_theta^gamma)."""
    from .exact.lattice import window_slice, stabilized
    from .spectra import _default_window

    vf = pair.vfilt()
    gamma = Q(gamma)

    def compute(window):
        sl = window_slice(pair.g0, window).intersect(
            window_slice(vf.lattice(gamma), window))
        vecs = [window.vector(list(row)) for row in sl.basis]
        piece = FDelPiece(gamma, _s_span_canonical(vecs, pair.rank))
        return piece.key()

    key = stabilized(compute, _default_window(pair))
    basis = [[LaurentPoly(dict(ent)) for ent in col] for col in key]
    return FDelPiece(gamma, basis)


def fdel_transversal(pair, gamma):
    """Griffiths transversality t . F_Del^gamma within F_Del^{gamma-1}."""
    piece = fdel_on_g(pair, gamma)
    lower = fdel_on_g(pair, gamma - 1)
    for g in piece.span_basis:
        img = pair.t_apply(g)
        if not _span_member_theta(lower.span_basis, img):
            return False
    return True


def _span_member_theta(gens, vec):
    """Membership in the C[theta, 1/theta]-span of Laurent generators."""
    if not gens:
        return all(e.is_zero() for e in vec)
    cols = [[RatFunc(e) for e in g] for g in gens]
    target = [RatFunc(e) for e in vec]
    coords = _rf_coordinates(cols, target)
    if coords is None:
        return False
    return all(c.is_zero() or c.is_laurent() for c in coords)


def fdel_limit_jump_dims(pair, beta):
    """Dimensions of the induced filtration of F_Del on gr_V^beta.

    Returns {gamma: dim F_Del^gamma gr_V^beta} at the jump values
    gamma = beta + p, which must match the tails of the bigraded table.
    """
    from .exact.lattice import stabilized, window_slice
    from .spectra import _default_window, spectrum_candidates

    from .exact.lattice import span_window_slice

    vf = pair.vfilt()
    vb = vf.lattice(beta)
    vup = vf.lattice(vf.next_jump_above(beta))
    out = {}
    for gamma in spectrum_candidates(pair):
        piece = fdel_on_g(pair, gamma)
        if not piece.span_basis:
            continue

        def compute(window, piece=piece):
            f_slice = span_window_slice(piece.span_basis, window)
            a = f_slice.intersect(window_slice(vb, window))
            b = f_slice.intersect(window_slice(vup, window))
            return a.dim - b.dim

        d = stabilized(compute, _default_window(pair))
        if d:
            out[gamma] = d
    return out
