"""Tests for the builtin equation catalogue and the model-specific solvers:
non-crossing partitions, degree-constrained map equations, face-distribution
fixed points, and the hard-particle model."""

import math
from fractions import Fraction

import sympy as sp

from cataleq import corpus, oracle
from cataleq.equations import SolveError, solve_series
from cataleq.series import PuiseuxSeries

t, u, v, s = sp.symbols("t u v s")

EXPECTED_BUILTINS = {
    "bipartite", "const3", "dissections", "double_root", "dyck",
    "eulerian23", "face_dist_3", "planar_maps", "temperley",
    "triangulations", "walk_3_2",
}


# ---------------------------------------------------------------------------
# catalogue plumbing
# ---------------------------------------------------------------------------

def test_builtin_names_complete():
    assert set(corpus.builtin_names()) == EXPECTED_BUILTINS


def test_builtin_sources_and_parsing():
    for name in corpus.builtin_names():
        src = corpus.builtin_source(name)
        assert "equation:" in src
        eq = corpus.load_builtin(name)
        assert eq.name == name
        assert eq.x0_degree >= 1


def test_unknown_builtin_rejected():
    try:
        corpus.load_builtin("no_such_model")
    except KeyError:
        pass
    else:
        raise AssertionError("expected KeyError")


def test_most_builtins_solve_with_zero_residual():
    for name in ("dyck", "walk_3_2", "planar_maps", "bipartite",
                 "dissections", "temperley", "const3", "double_root"):
        eq = corpus.load_builtin(name)
        sol = solve_series(eq, 8)
        assert sol.residual().is_zero_mod_order, name


def test_eulerian_two_three_solves():
    eq = corpus.load_builtin("eulerian23")
    sol = solve_series(eq, 5)
    assert sol.residual().is_zero_mod_order


def test_triangulations_is_parse_only():
    eq = corpus.load_builtin("triangulations")
    assert eq.x0_degree == 2
    try:
        solve_series(eq, 8)
    except SolveError:
        pass
    else:
        raise AssertionError("expected SolveError")


def test_planar_maps_series_head():
    sol = solve_series(corpus.load_builtin("planar_maps"), 4)
    f1 = sol.unknown(1)
    assert [f1.coeff(Fraction(n)) for n in range(4)] == [1, 2, 9, 54]


# ---------------------------------------------------------------------------
# non-crossing partitions
# ---------------------------------------------------------------------------

def test_noncrossing_counts_are_catalan():
    for m in range(2, 9):
        count = len(corpus.noncrossing_partitions(m))
        assert count == math.comb(2 * m, m) // (m + 1)


def test_noncrossing_blocks_partition_the_ground_set():
    for partition in corpus.noncrossing_partitions(5):
        seen = sorted(x for block in partition for x in block)
        assert seen == list(range(1, 6))


def test_is_internal_example():
    partition = [(1, 4), (2, 3)]
    assert corpus.is_internal((2, 3), partition)
    assert not corpus.is_internal((1, 4), partition)


def test_block_profile_sizes():
    internal, external = corpus.block_profile([(1, 4), (2, 3)], 4)
    assert internal[2] == 1 and external[2] == 1
    assert sum(internal) + sum(external) == 2


# ---------------------------------------------------------------------------
# degree-constrained map equations
# ---------------------------------------------------------------------------

def test_constellation_two_matches_bipartite_builtin():
    gen = corpus.constellation_equation(2)
    ref = corpus.load_builtin("bipartite")
    assert sp.expand(gen.poly_expr() - ref.poly_expr()) == 0


def test_constellation_three_matches_builtin():
    gen = corpus.constellation_equation(3)
    ref = corpus.load_builtin("const3")
    assert sp.expand(gen.poly_expr() - ref.poly_expr()) == 0


def test_constellation_counts_match_closed_form():
    for m in (2, 3):
        sol = solve_series(corpus.constellation_equation(m), 9)
        f1 = sol.unknown(1)
        for n in range(1, 9):
            assert f1.coeff(Fraction(n)) == \
                oracle.constellation_count(m, n), (m, n)


def test_face_distribution_equation_matches_builtin():
    gen = corpus.face_distribution_equation(3)
    ref = corpus.load_builtin("face_dist_3")
    assert sp.expand(gen.poly_expr() - ref.poly_expr()) == 0


# ---------------------------------------------------------------------------
# face-distribution fixed point
# ---------------------------------------------------------------------------

def test_face_distribution_triangle_relations():
    N = 10
    st = corpus.face_distribution_solve({3: 1}, N)
    r1, r2 = st.r1, st.r2
    t1 = PuiseuxSeries.t_power(1, order=N)
    # the m = 3 pair with a single weight on degree-3 faces
    lhs1 = r1
    rhs1 = (r2 + r1 * r1 * 3).t_shift(1)
    assert lhs1.eq_mod(rhs1, N)
    lhs2 = r2
    rhs2 = t1 - r1 * r1 * 3 + (r1 * r2 * 6 + r1 * r1 * r1 * 10).t_shift(1)
    assert lhs2.eq_mod(rhs2, N)


def test_face_distribution_g_derivative_identity():
    N = 10
    st = corpus.face_distribution_solve({3: Fraction(1)}, N)
    s_ser = st.r2 + st.r1 * st.r1
    # t^2 d(tG)/dt = (R2 + R1^2)(R2 + 9 R1^2), checked coefficientwise
    tg = st.g.t_shift(1)
    rhs = (s_ser * (st.r2 + st.r1 * st.r1 * 9)).t_shift(-2)
    for n in range(1, N - 2):
        assert tg.coeff(Fraction(n)) * n == rhs.coeff(Fraction(n - 1)), n


def test_face_distribution_matches_catalytic_solution():
    N = 9
    st = corpus.face_distribution_solve({3: Fraction(1)}, N)
    src = """vars: t u
unknowns: coeff(F,u,0), coeff(F,u,1)
equation: F = 1 + t*u^2*F^2 + t*(F - coeff(F,u,0) - u*coeff(F,u,1))/u
"""
    from cataleq.equations import parse_equation
    sol = solve_series(parse_equation(src, name="triangle_faces"), N)
    g_direct = sol.F.u_coeff_series(2).t_shift(-1)
    assert st.g.eq_mod(g_direct, N - 1)


# ---------------------------------------------------------------------------
# Laurent form of the fixed point
# ---------------------------------------------------------------------------

def test_laurent_pair_identities():
    N = 8
    weights = {1: Fraction(1, 2), 3: Fraction(1)}
    fd = corpus.face_distribution_solve(weights, N)
    bd = corpus.bdg_solve(weights, N)
    assert bd.s1.eq_mod(fd.r1 * 2, N)
    assert bd.s2.eq_mod(fd.r2 + fd.r1 * fd.r1, N)
    assert bd.g.eq_mod(fd.g, N - 1)


def test_laurent_coefficient_identity():
    N = 8
    weights = {2: Fraction(1), 3: Fraction(2)}
    fd = corpus.face_distribution_solve(weights, N)
    bd = corpus.bdg_solve(weights, N)
    for ell in range(0, 5):
        lhs = fd.beta_over_sqrt_R(ell)
        rhs = bd.coeff(0, ell + 1)
        assert lhs.eq_mod(rhs, N), ell


# ---------------------------------------------------------------------------
# hard particles
# ---------------------------------------------------------------------------

def test_hard_particle_equation_is_cubic():
    eq = corpus.hard_particle_equation()
    assert eq.x0_degree == 3
    assert eq.k == 2


def test_hard_particle_series_head():
    eq = corpus.hard_particle_equation(s=1)
    sol = solve_series(eq, 5)
    f1 = sol.unknown(1)
    assert [f1.coeff(Fraction(n)) for n in range(5)] == [1, 3, 18, 141, 1279]


def test_hard_particle_parameter_series():
    T = corpus.hard_particle_T(9)
    head = sp.expand(T - (s * t + (3 * s + 2 * s**2) * t**2
                          + (18 * s + 15 * s**2 + 8 * s**3) * t**3))
    assert sp.Poly(head, t).coeff_monomial(t) == 0
    assert sp.Poly(head, t).coeff_monomial(t**2) == 0
    assert sp.Poly(head, t).coeff_monomial(t**3) == 0
    # defining equation holds mod t^9
    res = sp.expand(T * (1 - 2 * T) * (s - 3 * T + 3 * T**2) - s**2 * t)
    low = sum(c * t**m for (m,), c in sp.Poly(res, t).terms() if m < 9)
    assert sp.expand(low) == 0


def test_hard_particle_parameter_coefficients_nonnegative():
    T = corpus.hard_particle_T(8)
    for (m,), c in sp.Poly(T, t).terms():
        for coeff in sp.Poly(c, s).coeffs():
            assert sp.Integer(coeff) >= 0


def test_hard_particle_closed_forms_numeric():
    N = 9
    eq = corpus.hard_particle_equation(s=1)
    sol = solve_series(eq, N)
    T = corpus.hard_particle_T(N, s=1)
    rhs_f, rhs_g = corpus.hard_particle_closed_forms(T, s=1)
    f1 = sum(sp.Rational(c) * t**int(e) for e, c in sol.unknown(1).coeffs.items())
    g1 = sum(sp.Rational(c) * t**int(e) for e, c in sol.unknown(2).coeffs.items())
    # the auxiliary unknown includes the empty configuration; the closed
    # form for G(1) does not
    for expr in (t**2 * f1 - rhs_f, t**2 * (g1 - 1) - rhs_g):
        low = sum(c * t**m for (m,), c in
                  sp.Poly(sp.expand(expr), t).terms() if m < N)
        assert sp.expand(low) == 0
