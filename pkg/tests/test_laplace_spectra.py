"""End-to-end exact pipeline tests on the worked examples.

E1(alpha) is the one-singular-point module t*d - alpha with its unitary
filtration; E3 is the two-point module t(t-1)d - (1/3)(t-1) - (1/2)t.
Expected values for E1 are reproduced from the worked example in the
sources; E3 values are frozen from the independent window-enumeration
oracle below plus consistency certificates (multiplicity sums, product
identities, z_o-independence).
"""

from fractions import Fraction as Q

import pytest

from lapspec.errors import NonRegularAtInfinity
from lapspec.exact import Lattice, LaurentPoly, lp
from lapspec.laplace import (FilteredDModule, brieskorn,
                             deligne_filtration_lattice,
                             deligne_decreasing_check,
                             deligne_transversality_check, fdel_on_g,
                             fdel_limit_jump_dims, fdel_transversal,
                             laplace_transform, u_matrix,
                             unitary_filtration, v_filtration_at_point)
from lapspec.spectra import (LatticePair, SpectralPolynomial, bigraded_spectrum,
                             birkhoff_v_solution, derham_fiber,
                             hodge_diagonal_pair, nu_gamma, sp_infinity,
                             sp_zero, susy_poly)


def e1_module(alpha=Q(1, 3)):
    # P = t d - alpha
    return FilteredDModule({(1, 1): Q(1), (0, 0): -Q(alpha)})


def e3_module():
    # P = t(t-1) d - (1/3)(t-1) - (1/2) t
    return FilteredDModule({(2, 1): Q(1), (1, 1): Q(-1),
                            (1, 0): Q(-1, 3) - Q(1, 2), (0, 0): Q(1, 3)})


def e1_pair(alpha=Q(1, 3)):
    pair, _ = brieskorn(e1_module(alpha))
    return pair


def e3_pair():
    pair, _ = brieskorn(e3_module())
    return pair


# -- oracle ------------------------------------------------------------------


def oracle_nu(pair, gamma, z_o=Q(1), half=14):
    """Brute-force window enumeration of Eq. (1.3), independent of the
    production path: spans are enumerated monomial by monomial and reduced
    with a plain fraction RREF."""
    from lapspec.exact.linalg import rref

    n = pair.rank
    vf = pair.vfilt()

    def vectors_of(lattice, mult=None):
        out = []
        cols = lattice.basis_columns()
        step = 1 if lattice.side == "0" else -1
        for col in cols:
            for k in range(0, 4 * half):
                vec = [e.shift(step * k) for e in col]
                if mult is not None:
                    vec = [mult * e for e in vec]
                if all(e.is_zero() or (-half <= e.minexp()
                                       and e.maxexp() <= half)
                       for e in vec):
                    out.append(vec)
        return out

    def coords(vec):
        row = []
        for e in range(-half, half + 1):
            for i in range(n):
                row.append(vec[i].coeff(e))
        return row

    def space(vecs):
        return rref([coords(v) for v in vecs])[0]

    def dim_int(rows1, rows2):
        # dim(A ^ B) = dim A + dim B - dim(A+B)
        a = len(rows1)
        b = len(rows2)
        ab = len(rref(rows1 + rows2)[0])
        return a + b - ab

    g0v = space(vectors_of(pair.g0))
    vg = space(vectors_of(vf.lattice(gamma)))
    vup = space(vectors_of(vf.lattice(vf.next_jump_above(gamma))))
    mult = LaurentPoly({-1: Q(1), 0: -z_o})
    zg0 = space(vectors_of(pair.g0, mult=mult))
    dim_a = dim_int(g0v, vg)
    dim_b = dim_int(g0v, vup)
    # (z - z_o) G0 ^ V^gamma
    dim_c = dim_int(zg0, vg)
    # dim of B + C inside A: B, C both subspaces of A
    bspace = rref([r for r in _int_basis(g0v, vup)])[0]
    cspace = rref([r for r in _int_basis(zg0, vg)])[0]
    dim_bc = len(rref(list(bspace) + list(cspace))[0])
    return dim_a - dim_bc


def _int_basis(rows1, rows2):
    """Basis of the intersection of two row spaces (oracle-side)."""
    from lapspec.exact.linalg import kernel_basis, rref
    if not rows1 or not rows2:
        return []
    ncols = len(rows1[0])
    sys_rows = []
    for i in range(ncols):
        sys_rows.append([r[i] for r in rows1] + [-r[i] for r in rows2])
    out = []
    for k in kernel_basis(sys_rows):
        u = k[: len(rows1)]
        vec = [sum((u[j] * rows1[j][i] for j in range(len(rows1))), Q(0))
               for i in range(ncols)]
        if any(x != 0 for x in vec):
            out.append(vec)
    return rref(out)[0]


# -- E1: the worked single-point example --------------------------------------


@pytest.mark.parametrize("alpha", [Q(1, 3), Q(1, 2), Q(2, 5)])
def test_e1_full_pipeline(alpha):
    pair = e1_pair(alpha)
    assert pair.rank == 1
    assert nu_gamma(pair, -alpha) == 1
    assert nu_gamma(pair, alpha) == 0
    sp = sp_infinity(pair)
    assert sp.roots == [(-alpha, 1)]


def test_e1_laplace_matrix():
    lap = laplace_transform(e1_module())
    # theta d/dtheta acts by -4/3 on the class of 1
    assert lap.conn.matrix.m[0][0] == lp(Q(-4, 3))


def test_e1_brieskorn_lattice():
    # G0 = C[1/theta] . [theta] in the distinguished basis [1]
    pair = e1_pair()
    expect = Lattice.from_generators([[lp({1: 1})]], 1, "theta", "inf")
    assert pair.g0 == expect


def test_e1_unitary_filtration():
    gens, diag = unitary_filtration(e1_module())
    assert not diag["degenerate"]
    assert diag["exponents"][Q(0)] == Q(1, 3)
    # the generator class spans C[t].[d]
    (g,) = gens
    assert set(j for (_, j) in g) <= {0, 1}


def test_e1_sp_zero_equals_sp_infinity():
    pair = e1_pair()
    sp0 = sp_zero(pair)
    spi = sp_infinity(pair)
    assert sp0.same_roots(spi)
    assert sp0.roots == [(Q(-1, 3), 1)]


def test_e1_bigraded():
    pair = e1_pair()
    tab = bigraded_spectrum(pair, "inf")
    assert tab == {(Q(-1, 3), 0): 1}
    # the class of theta sits in V_{theta'}^{1/3} of the local factor, so
    # the window-normalized split is beta = -2/3, p = -1 with root
    # p - beta = -1/3, matching SP0
    tab0 = bigraded_spectrum(pair, "0")
    assert tab0 == {(Q(0), Q(-2, 3), -1): 1}


def test_e1_derham_and_birkhoff():
    pair = e1_pair()
    fib = derham_fiber(pair)
    assert fib.dimension == 1
    grd = dict(fib.gr_dims())
    assert grd == {Q(-1, 3): 1}
    sol = birkhoff_v_solution(pair)
    assert sol.certificate["fiber_matches_nu"]
    # G'^0 spanned by the eigenvector over C[theta]
    assert sol.gprime0.contains_vector([lp({1: 1})])


def test_e1_u_matrix_zero():
    pair = e1_pair()
    assert u_matrix(pair, e1_module()) == [[Q(0)]]


def test_e1_v_at_point():
    vd = v_filtration_at_point(e1_module(), Q(0))
    assert vd.exponents == [Q(1, 3)]
    vd2 = v_filtration_at_point(FilteredDModule({(0, 1): 1},
                                                check_regular=False), Q(0))
    assert vd2.exponents == [Q(0)]


def test_e1_fdel_on_g():
    pair = e1_pair()
    piece = fdel_on_g(pair, Q(-1, 3))
    assert len(piece.span_basis) == 1
    assert fdel_transversal(pair, Q(-1, 3))
    above = fdel_on_g(pair, Q(-1, 3) + Q(1, 100))
    assert not above.span_basis
    # dims of the limit filtration on gr_V^beta are the tail sums of the
    # bigraded table: here 1 for every gamma = -1/3 - k, 0 above -1/3
    dims = fdel_limit_jump_dims(pair, Q(-1, 3))
    assert dims[Q(-1, 3)] == 1
    assert Q(2, 3) not in dims
    assert all(d == 1 for d in dims.values())
    assert all((g - Q(-1, 3)).denominator == 1 and g <= Q(-1, 3)
               for g in dims)


# -- Deligne lattices at infinity ---------------------------------------------


def test_deligne_example_69():
    # F_Del^{-1/3 - p} = C[t'] t'^{-(2p+1)} [1]; F_Del^{-p} = C[t'] t'^{-2p};
    # zero for gamma > 0
    mod = e1_module(Q(1, 3))
    for p in range(0, 3):
        dl = deligne_filtration_lattice(mod, -Q(1, 3) - p)
        want = Lattice.from_generators([[lp({2 * p + 1: 1})]], 1, "t", "inf")
        assert dl.lattice == want
        dl2 = deligne_filtration_lattice(mod, Q(-p))
        want2 = Lattice.from_generators([[lp({2 * p: 1})]], 1, "t", "inf")
        assert dl2.lattice == want2
    assert deligne_filtration_lattice(mod, Q(1, 2)).is_zero()
    assert deligne_filtration_lattice(mod, Q(100)).is_zero()


def test_deligne_example_68_generic_one_jump():
    # one-jump inputs: F_Del^{beta+p} = x^{2p-1} V^beta for p <= 0
    mod = e1_module(Q(2, 5))
    beta = -Q(2, 5)
    from lapspec.laplace import _v_infinity_lattices
    vf = _v_infinity_lattices(mod)
    for p in (0, -1, -2):
        dl = deligne_filtration_lattice(mod, beta + p)
        vb = vf.lattice(beta)
        want_gens = [[e.flip().shift(-(2 * p - 1)) for e in col]
                     for col in vb.basis_columns()]
        want = Lattice.from_generators(want_gens, 1, "t", "inf")
        assert dl.lattice == want
    assert deligne_filtration_lattice(mod, beta + 1).is_zero()


def test_deligne_monotone_and_transversal():
    mod = e1_module(Q(1, 3))
    gammas = [Q(-1, 3) - p for p in range(0, 3)] + [Q(0), Q(-1), Q(-2)]
    assert deligne_decreasing_check(mod, gammas)
    for g in (Q(-1, 3), Q(0), Q(-4, 3)):
        assert deligne_transversality_check(mod, g)


# -- Hodge-diagonal pairs ------------------------------------------------------


def test_hodge_diagonal_lemma_54():
    pair = hodge_diagonal_pair([Q(0), Q(1)])
    spi = sp_infinity(pair)
    assert spi.roots == [(Q(0), 1), (Q(1), 1)]
    sp0 = sp_zero(pair)
    assert sp0.same_roots(spi)
    susy = susy_poly([[Q(0), Q(0)], [Q(0), Q(0)]],
                     [[Q(0), Q(0)], [Q(0), Q(1)]])
    assert susy.same_roots(spi)
    tab = bigraded_spectrum(pair, "inf")
    assert tab == {(Q(0), 0): 1, (Q(0), 1): 1}


def test_hodge_diagonal_birkhoff_eigen_case():
    pair = hodge_diagonal_pair([Q(0), Q(1), Q(3)])
    sol = birkhoff_v_solution(pair)
    assert sol.certificate["fiber_matches_nu"]


def test_susy_exact_and_floating():
    s = susy_poly(None, [[Q(0), Q(0)], [Q(0), Q(1)]])
    assert s.roots == [(Q(0), 1), (Q(1), 1)]
    s2 = susy_poly(None, [[Q(0), Q(0)], [Q(0), Q(0)]])
    assert s2.roots == [(Q(0), 2)]
    # Q = [[1, i], [-i, 1]] -> roots {0, 2}
    s3 = susy_poly(None, [[(Q(1), Q(0)), (Q(0), Q(1))],
                          [(Q(0), Q(-1)), (Q(1), Q(0))]])
    assert s3.roots == [(Q(0), 1), (Q(2), 1)]
    # weight metadata never affects values
    s4 = susy_poly(None, [[Q(0), Q(0)], [Q(0), Q(1)]], weight=7)
    assert s4.same_roots(s)


def test_susy_non_hermitian():
    import pytest as _pytest
    from lapspec.errors import NonHermitian
    with _pytest.raises(NonHermitian):
        susy_poly(None, [[(Q(0), Q(0)), (Q(1), Q(0))],
                         [(Q(0), Q(0)), (Q(0), Q(0))]])


# -- E3: two singular points ---------------------------------------------------


def test_e3_module_shape():
    mod = e3_module()
    assert mod.singular_points() == [Q(0), Q(1)]
    assert mod.d_order == 1
    assert mod.t_degree() == 2


def test_e3_exponents():
    vd0 = v_filtration_at_point(e3_module(), Q(0))
    assert vd0.exponents == [Q(1, 3)]
    vd1 = v_filtration_at_point(e3_module(), Q(1))
    assert vd1.exponents == [Q(1, 2)]


def test_e3_transform_regular_slopes():
    from lapspec.meroconn import check_no_ramification
    pair = e3_pair()
    assert pair.rank == 2
    from lapspec.spectra import _theta_prime_connection
    rep = check_no_ramification(_theta_prime_connection(pair), point="0")
    assert rep["ok"]
    assert rep["slopes"] == [Q(0), Q(1)] or rep["slopes"] == [Q(1)]


def test_e3_u_matrix():
    pair = e3_pair()
    u = u_matrix(pair, e3_module())
    from lapspec.exact.linalg import charpoly, rational_roots
    roots, split = rational_roots(charpoly(u))
    assert split
    assert sorted(r for r, m in roots for _ in range(m)) == [Q(0), Q(1)]


def test_e3_nu_against_oracle_and_zo_independence():
    pair = e3_pair()
    spi = sp_infinity(pair)
    assert spi.degree == 2
    for g, m in spi.roots:
        assert oracle_nu(pair, g) == m
        for zo in (Q(1), Q(2), Q(5)):
            assert nu_gamma(pair, g, zo) == m
    # frozen from the oracle run: the spectrum at infinity of E3
    assert spi.roots == [(Q(-1, 6), 1), (Q(0), 1)]


def test_e3_sp_zero_local_exponents():
    pair = e3_pair()
    sp0 = sp_zero(pair)
    # local spectra at c = 0 and c = 1: one root each, -1/3 and -1/2
    assert sp0.roots == [(Q(-1, 2), 1), (Q(-1, 3), 1)]


def test_e3_bigraded_products():
    pair = e3_pair()
    tab = bigraded_spectrum(pair, "inf")
    spi = sp_infinity(pair)
    got = SpectralPolynomial([(b + p, m) for (b, p), m in tab.items()],
                             "SPinf")
    assert got.same_roots(spi)
    tab0 = bigraded_spectrum(pair, "0")
    sp0 = sp_zero(pair, verify_truncation=False)
    got0 = SpectralPolynomial([(p - b, m) for (_c, b, p), m in tab0.items()],
                              "SP0")
    assert got0.same_roots(sp0)


def test_e3_birkhoff_and_fiber():
    pair = e3_pair()
    sol = birkhoff_v_solution(pair)
    assert sol.certificate["fiber_matches_nu"]
    fib = derham_fiber(pair)
    assert fib.dimension == 2
    assert dict(fib.gr_dims()) == {Q(-1, 6): 1, Q(0): 1}


def test_e3_generation_index_independence():
    mod = e3_module()
    pair0, lap = brieskorn(mod)
    gens, p0, _ = unitary_filtration(mod), 0, None
    # F^{-1} = F^0 + d F^0: same Brieskorn lattice from p0 - 1
    from lapspec import weyl as W
    f0 = gens[0]
    f_minus = f0 + [W.weyl_mul(W.weyl({(0, 1): Q(1)}), g) for g in f0]
    pairm, _ = brieskorn(mod, lap=lap, p0_override=(f_minus, -1))
    assert pairm.g0 == pair0.g0


def test_e3_eq_112_inclusion():
    # images of F^p generators lie in theta'^p G0
    mod = e3_module()
    pair, lap = brieskorn(mod)
    from lapspec import weyl as W
    from lapspec.laplace import _rf_coordinates
    gens, _diag = unitary_filtration(mod)
    d_op = W.weyl({(0, 1): Q(1)})
    level = list(gens)
    for p in (0, -1, -2):
        for g in level:
            v = lap.nfm.nf(W.laplace_substitute(g))
            coords = _rf_coordinates(lap.basis, v)
            col = [c.as_laurent() if not c.is_zero() else LaurentPoly.zero()
                   for c in coords]
            target = pair.g0.scaled_by_var_power(-p)   # theta'^p G0
            assert target.contains_vector(col)
        level = level + [W.weyl_mul(d_op, g) for g in level]


def test_direct_sum_multiplicativity():
    p1 = e1_pair(Q(1, 3))
    p2 = hodge_diagonal_pair([Q(0), Q(1)])
    both = p1.direct_sum(p2)
    sp = sp_infinity(both)
    want = sp_infinity(p1).product(sp_infinity(p2))
    assert sp.same_roots(want)
    sp0 = sp_zero(both, verify_truncation=False)
    want0 = sp_zero(p1).product(sp_zero(p2))
    assert sp0.same_roots(want0)


def test_irregular_at_infinity_rejected():
    with pytest.raises(NonRegularAtInfinity):
        FilteredDModule({(0, 1): Q(1), (0, 0): Q(-1)})


def test_degenerate_laplace():
    lap = laplace_transform(FilteredDModule({(0, 1): Q(1)},
                                            check_regular=False))
    assert lap.degenerate and lap.rank == 0
