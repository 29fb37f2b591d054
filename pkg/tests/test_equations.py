"""Tests for the equation DSL and the layer-by-layer series solver."""

from fractions import Fraction

import sympy as sp

from cataleq.equations import (
    CatalyticEquation,
    ParseError,
    SolveError,
    UnknownBinding,
    compose_series,
    divided_difference,
    parse_equation,
    solve_series,
)
from cataleq.series import BivariateSeries

WALKS = """
vars: t u
unknowns: F(0)
equation: F = 1 + t*u*F + (t/u)*(F - F(0))
"""

MAPS = """
vars: t u
unknowns: F(1)
equation: F = 1 + t*u^2*F^2 + t*u*(u*F - F(1))/(u - 1)
"""


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_produces_cleared_polynomial():
    eq = parse_equation(WALKS)
    assert eq.k == 1
    x0, x1 = eq.x[0], eq.x[1]
    t, v = eq.t, eq.v
    expect = v - v * x0 + t * v**2 * x0 + t * x0 - t * x1
    # cleared polynomial agrees up to sign
    diff = sp.expand(eq.poly_expr() - expect)
    alt = sp.expand(eq.poly_expr() + expect)
    assert diff == 0 or alt == 0


def test_parse_binding_kinds():
    eq = parse_equation("""
vars: t u
unknowns: F(1), F'(1), coeff(F,u,2)
equation: F = 1 + t*(F(1) + F'(1) + coeff(F,u,2))*F
""")
    kinds = [b.kind for b in eq.bindings]
    assert kinds == ["value", "deriv", "coeff"]
    assert eq.bindings[1].r == 1 and eq.bindings[1].a == 1
    assert eq.bindings[2].j == 2


def test_parse_rejects_bad_character():
    try:
        parse_equation("vars: t u\nunknowns: F(0)\nequation: F = 1 + @t")
    except ParseError as e:
        assert "line" in str(e)
    else:
        raise AssertionError("expected ParseError")


def test_parse_rejects_unbound_symbol():
    try:
        parse_equation("vars: t u\nunknowns: F(0)\nequation: F = 1 + q*t*F")
    except ParseError as e:
        assert "weights" in str(e)
    else:
        raise AssertionError("expected ParseError")


def test_parse_rejects_undeclared_unknown():
    try:
        parse_equation("vars: t u\nunknowns: F(0)\nequation: F = 1 + t*F(1)")
    except ParseError as e:
        assert "unknowns" in str(e)
    else:
        raise AssertionError("expected ParseError")


def test_parse_requires_equation_line():
    try:
        parse_equation("vars: t u\nunknowns: F(0)")
    except ParseError:
        pass
    else:
        raise AssertionError("expected ParseError")


def test_parse_custom_variable_names():
    eq = parse_equation("""
vars: t w
unknowns: coeff(F,w,0)
equation: F = 1 + t*w*F + (t/w)*(F - coeff(F,w,0))
""")
    sol = solve_series(eq, 9)
    assert [sol.unknown(1).coeff(n) for n in (0, 2, 4, 6)] == [1, 1, 2, 5]


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def test_walks_give_catalan_numbers():
    sol = solve_series(parse_equation(WALKS), 13)
    got = [sol.unknown(1).coeff(n) for n in range(0, 12, 2)]
    assert got == [1, 1, 2, 5, 14, 42]
    # odd layers vanish for excursions
    assert all(sol.unknown(1).coeff(n) == 0 for n in range(1, 12, 2))


def test_planar_maps_series():
    sol = solve_series(parse_equation(MAPS), 8)
    got = [sol.unknown(1).coeff(n) for n in range(7)]
    assert got == [1, 2, 9, 54, 378, 2916, 24057]


def test_solution_residual_vanishes():
    eq = parse_equation(MAPS)
    sol = solve_series(eq, 9)
    assert sol.residual().is_zero_mod_order()


def test_weights_stay_symbolic():
    eq = parse_equation("""
vars: t u
unknowns: F(0)
weights: z
equation: F = 1 + z*t*u*F + (t/u)*(F - F(0))
""")
    sol = solve_series(eq, 9)
    z = sp.Symbol("z")
    c = sol.unknown(1).coeff(4)
    assert sp.expand(sp.sympify(c) - 2 * z**2) == 0


def test_derivative_binding_solves():
    eq = parse_equation("""
vars: t u
unknowns: F(1), F'(1)
equation: F = 1 + t*u*F^2 + t*(F - F(1) - (u - 1)*F'(1))/(u - 1)^2
""")
    sol = solve_series(eq, 8)
    assert sol.residual().is_zero_mod_order()
    assert sol.unknown(1).coeff(0) == 1


def test_non_well_founded_layer_reports_order():
    eq = parse_equation("""
vars: t u
unknowns: F(0)
equation: F = 1 + t*(F - F(0))/u + t*F/(1 - u)
""")
    try:
        solve_series(eq, 6)
    except SolveError as e:
        assert e.order == 1
    else:
        raise AssertionError("expected SolveError")


def test_unsolved_form_is_rejected():
    eq = parse_equation("""
vars: t u
unknowns: F(0)
equation: F^2 = t + F(0)*F
""")
    try:
        solve_series(eq, 5)
    except SolveError as e:
        assert "solved form" in str(e)
    else:
        raise AssertionError("expected SolveError")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def test_divided_difference_polynomial_example():
    u = sp.Symbol("u")
    F = BivariateSeries.from_upoly(1 + u + u**2, u, order=3)
    D = divided_difference(F, 1)
    assert D.coeff(0, 0) == 1 and D.coeff(0, 1) == 1
    assert D.u_degree() == 1


def test_divided_difference_second_order():
    u = sp.Symbol("u")
    F = BivariateSeries.from_upoly(3 + 2 * u + 7 * u**2 + u**3, u, order=3)
    D2 = divided_difference(F, 2)
    assert D2.coeff(0, 0) == 7 and D2.coeff(0, 1) == 1


def test_compose_series_matches_direct_evaluation():
    eq = parse_equation(MAPS)
    sol = solve_series(eq, 7)
    # plug the solution into the cleared polynomial by hand
    val = compose_series(eq.poly_expr(),
                         {eq.x[0]: sol.F, eq.x[1]: sol.unknowns[0]}, 7,
                         t=eq.t, v=eq.v)
    assert val.is_zero_mod_order()


def test_binding_apply_matches_definitions():
    eq = parse_equation(MAPS)
    sol = solve_series(eq, 7)
    b = UnknownBinding("value", 1, a=1)
    direct = b.apply(sol.F)
    assert direct.eq_mod(sol.unknown(1), 7)
