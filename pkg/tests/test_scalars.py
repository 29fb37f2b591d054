"""Tests for the scalar layer: rationals, sympy expressions, algebraic numbers."""

from fractions import Fraction

import sympy as sp

from cataleq.scalars import (
    AlgebraicScalar,
    as_fraction,
    as_sympy,
    is_rational,
    normalize_scalar,
    primitive_element,
    scalar_eq,
    scalar_is_zero,
    scalar_sqrt,
    to_scalar,
)


def test_to_scalar_coercion():
    assert to_scalar(3) == Fraction(3)
    assert to_scalar(Fraction(1, 2)) == Fraction(1, 2)
    assert to_scalar(sp.Rational(5, 7)) == Fraction(5, 7)
    z = sp.Symbol("z")
    assert to_scalar(z + 1) == z + 1


def test_is_rational_and_as_fraction():
    assert is_rational(Fraction(2, 3))
    assert as_fraction(sp.Rational(2, 3)) == Fraction(2, 3)
    assert not is_rational(sp.sqrt(2))


def test_scalar_is_zero_detects_hidden_zero():
    z = sp.Symbol("z")
    expr = (z + 1) ** 2 - z**2 - 2 * z - 1
    assert scalar_is_zero(expr)
    assert not scalar_is_zero(z)


def test_scalar_sqrt_perfect_square_stays_rational():
    s = scalar_sqrt(Fraction(9, 4))
    assert s == Fraction(3, 2)
    assert isinstance(s, Fraction)


def test_scalar_sqrt_irrational_goes_symbolic():
    s = scalar_sqrt(Fraction(2))
    assert scalar_is_zero(as_sympy(s) ** 2 - 2)


def test_scalar_eq_mixed_representations():
    assert scalar_eq(Fraction(1, 2), sp.Rational(1, 2))
    assert not scalar_eq(Fraction(1, 2), Fraction(1, 3))


def test_normalize_scalar_returns_fraction_when_possible():
    z = sp.Symbol("z")
    c = normalize_scalar(sp.Rational(3, 4) + 0 * z)
    assert isinstance(c, Fraction) and c == Fraction(3, 4)


def _sqrt2():
    # theta with theta^2 = 2, the positive root
    return AlgebraicScalar.theta((Fraction(-2), Fraction(0), Fraction(1)),
                                 ("real", Fraction(1), Fraction(2)))


def test_algebraic_scalar_arithmetic():
    a = _sqrt2()
    two = a * a
    assert two.is_rational()
    assert scalar_eq(two.value[0], Fraction(2))
    b = a + a
    assert scalar_eq((b * b).value[0], Fraction(8))


def test_algebraic_scalar_inverse():
    a = _sqrt2()
    inv = a.inverse()
    prod = a * inv
    assert prod.is_rational()
    assert scalar_eq(prod.value[0], Fraction(1))


def test_algebraic_scalar_as_expr_matches_isolation():
    a = _sqrt2()
    expr = sp.nsimplify(a.as_expr())
    assert sp.simplify(expr - sp.sqrt(2)) == 0


def test_primitive_element_adjoins_both():
    a = _sqrt2()
    b = AlgebraicScalar.theta((Fraction(-3), Fraction(0), Fraction(1)),
                              ("real", Fraction(1), Fraction(2)))
    gamma, in_gamma_a, in_gamma_b = primitive_element(a, b)
    assert gamma.degree() == 4
    # re-expressed images must square back to 2 and 3
    assert scalar_eq((in_gamma_a * in_gamma_a).value[0], Fraction(2))
    assert scalar_eq((in_gamma_b * in_gamma_b).value[0], Fraction(3))
