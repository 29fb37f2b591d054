"""Tests for truncated Puiseux series and bivariate series in K[u][[t]]."""

import random
from fractions import Fraction

import sympy as sp

from cataleq.series import (
    INF,
    BeyondTruncation,
    BivariateSeries,
    PuiseuxSeries,
)

u = sp.Symbol("u")


def _rand_pseries(rng, order, *, unit=False):
    """Random rational series mod t^order, optionally with constant term 1."""
    terms = {}
    for n in range(order):
        if rng.random() < 0.6:
            terms[Fraction(n)] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    if unit:
        terms[Fraction(0)] = Fraction(1)
    return PuiseuxSeries.from_terms(terms, order)


def _rand_bseries(rng, order, maxdeg=3, *, unit=False):
    coeffs = {}
    for n in range(order):
        sl = {}
        for j in range(maxdeg + 1):
            if rng.random() < 0.5:
                sl[j] = Fraction(rng.randint(-4, 4))
        if sl:
            coeffs[Fraction(n)] = sl
    if unit:
        coeffs.setdefault(Fraction(0), {})[0] = Fraction(1)
    return BivariateSeries(coeffs, order)


# ---------------------------------------------------------------------------
# univariate series
# ---------------------------------------------------------------------------

def test_geometric_inverse():
    S = PuiseuxSeries.from_terms({Fraction(0): 1, Fraction(1): -1}, 10)
    inv = S.inverse()
    for n in range(10):
        assert inv.coeff(Fraction(n)) == 1


def test_inverse_is_two_sided():
    rng = random.Random(60315)
    for _ in range(30):
        S = _rand_pseries(rng, 12, unit=True)
        one = S * S.inverse()
        assert one.eq_mod(PuiseuxSeries.const(1, 12), 12)


def test_inverse_shifts_laurent_valuation():
    S = PuiseuxSeries.from_terms({Fraction(2): 1, Fraction(3): 1}, 8)
    inv = S.inverse()
    assert inv.valuation() == Fraction(-2)
    assert (S * inv).eq_mod(PuiseuxSeries.const(1, 6), 5)


def test_sqrt_of_one_minus_4t2():
    S = PuiseuxSeries.from_terms({Fraction(0): 1, Fraction(2): -4}, 8)
    r = S.sqrt()
    expect = {0: 1, 2: -2, 4: -2, 6: -4}
    for n in range(8):
        assert r.coeff(Fraction(n)) == expect.get(n, 0)


def test_sqrt_squares_back():
    rng = random.Random(71002)
    for _ in range(30):
        S = _rand_pseries(rng, 10, unit=True)
        r = S.sqrt()
        assert (r * r).eq_mod(S, 10)


def test_sqrt_with_ramification():
    S = PuiseuxSeries.from_terms({Fraction(1): 1, Fraction(2): 1}, 6)
    r = S.sqrt()
    assert r.valuation() == Fraction(1, 2)
    assert (r * r).eq_mod(S, 6)
    assert r.ramification == 2


def test_ramification_collapses_on_square():
    S = PuiseuxSeries.t_power(Fraction(1, 2), order=5)
    sq = S * S
    assert sq.ramification == 1
    assert sq.coeff(Fraction(1)) == 1


def test_coeff_beyond_truncation_raises():
    S = PuiseuxSeries.from_terms({Fraction(0): 1}, 4)
    try:
        S.coeff(Fraction(5))
    except BeyondTruncation:
        pass
    else:
        raise AssertionError("expected BeyondTruncation")


def test_truncation_order_is_pessimistic():
    rng = random.Random(88011)
    for _ in range(30):
        A = _rand_pseries(rng, rng.randint(4, 9), unit=True)
        B = _rand_pseries(rng, rng.randint(4, 9), unit=True)
        # a factor with valuation v shifts the reliable order up by v
        assert (A * B).order == min(A.order, B.order)
        assert (A + B).order == min(A.order, B.order)
    T = PuiseuxSeries.t_power(2, order=INF)
    S = _rand_pseries(rng, 5, unit=True)
    assert (T * S).order == 7


def test_truncate_then_multiply_commutes():
    rng = random.Random(12899)
    for _ in range(30):
        A = _rand_pseries(rng, 10)
        B = _rand_pseries(rng, 10)
        n = rng.randint(2, 8)
        left = (A * B).truncate(n)
        right = (A.truncate(n) * B.truncate(n)).truncate(n)
        assert left.eq_mod(right, n)


def test_pseries_text_deterministic():
    S = PuiseuxSeries.from_terms({Fraction(1, 2): 1, Fraction(3): Fraction(-9, 8)}, 4)
    assert S.text() == S.text()
    assert "t^(1/2)" in S.text()


# ---------------------------------------------------------------------------
# bivariate series
# ---------------------------------------------------------------------------

def test_geometric_in_two_variables():
    # 1/(1 - u t) = sum u^n t^n
    S = BivariateSeries.const(1, 8) - BivariateSeries.monomial(1, 1, 1, 8)
    inv = S.unit_inverse()
    for n in range(8):
        assert inv.coeff(n, n) == 1
        assert inv.coeff(n, n + 1) == 0


def test_divide_roundtrip():
    rng = random.Random(30117)
    for _ in range(25):
        A = _rand_bseries(rng, 8)
        D = _rand_bseries(rng, 8, unit=True)
        q = (A * D).divide(D)
        assert q.eq_mod(A, 8)


def test_divide_by_pure_u_monomial():
    F = BivariateSeries.monomial(1, 1, 2, 6) + BivariateSeries.monomial(3, 2, 1, 6)
    D = BivariateSeries.monomial(1, 0, 1, INF)
    q = F.divide(D)
    assert q.coeff(1, 1) == 1 and q.coeff(2, 0) == 3


def test_divide_reports_non_exact_layer():
    F = BivariateSeries.const(1, 5)
    D = BivariateSeries.monomial(1, 0, 1, INF)
    try:
        F.divide(D)
    except ValueError as e:
        assert "t^" in str(e)
    else:
        raise AssertionError("expected ValueError")


def test_bivariate_sqrt():
    rng = random.Random(50923)
    for _ in range(15):
        R = _rand_bseries(rng, 7, maxdeg=2, unit=True)
        S = R * R
        r = S.sqrt()
        assert (r * r).eq_mod(S, 7)


def test_substitute_u_is_a_homomorphism():
    rng = random.Random(64230)
    for _ in range(15):
        A = _rand_bseries(rng, 7, maxdeg=2)
        B = _rand_bseries(rng, 7, maxdeg=2)
        U = PuiseuxSeries.from_terms(
            {Fraction(1): Fraction(rng.randint(1, 3)),
             Fraction(2): Fraction(rng.randint(-2, 2))}, 7)
        left = (A * B).substitute_u(U)
        right = A.substitute_u(U) * B.substitute_u(U)
        assert left.eq_mod(right, 6)


def _as_bivariate(S):
    """Embed a PuiseuxSeries as a u-free BivariateSeries."""
    return BivariateSeries({e: {0: c} for e, c in S.coeffs.items()}, S.order)


def test_deflate_identity():
    rng = random.Random(90125)
    uu = BivariateSeries.monomial(1, 0, 1, INF)
    for _ in range(15):
        Phi = _rand_bseries(rng, 7, maxdeg=3)
        U = PuiseuxSeries.from_terms({Fraction(1): Fraction(1),
                                      Fraction(3): Fraction(-2)}, 7)
        Psi = Phi.deflate(U)
        val = Phi.substitute_u(U)
        recon = (uu - _as_bivariate(U)) * Psi + _as_bivariate(val)
        assert recon.eq_mod(Phi, 6)


def test_deflate_exact_root():
    # u^2 - t deflated at its root t^(1/2) leaves u + t^(1/2)
    Phi = BivariateSeries.monomial(1, 0, 2, 6) - BivariateSeries.monomial(1, 1, 0, 6)
    U = PuiseuxSeries.t_power(Fraction(1, 2), order=6)
    Psi = Phi.deflate(U)
    assert Phi.substitute_u(U).is_zero_mod_order()
    assert Psi.coeff(0, 1) == 1
    assert Psi.coeff(Fraction(1, 2), 0) == 1


def test_u_derivative_product_rule():
    rng = random.Random(14159)
    for _ in range(15):
        A = _rand_bseries(rng, 6)
        B = _rand_bseries(rng, 6)
        lhs = (A * B).u_derivative()
        rhs = A.u_derivative() * B + A * B.u_derivative()
        assert lhs.eq_mod(rhs, 6)


def test_eval_u_is_a_ring_map():
    rng = random.Random(27183)
    a = Fraction(1)
    for _ in range(15):
        A = _rand_bseries(rng, 6)
        B = _rand_bseries(rng, 6)
        lhs = (A * B).eval_u(a)
        rhs = A.eval_u(a) * B.eval_u(a)
        assert lhs.eq_mod(rhs, 6)


def test_shift_u_re_expands():
    # (u+1)^2 shifted by -1 is u^2
    S = BivariateSeries.from_upoly((u + 1) ** 2, u, order=4)
    T = S.shift_u_by(Fraction(-1))
    assert T.coeff(0, 2) == 1
    assert T.coeff(0, 1) == 0 and T.coeff(0, 0) == 0


def test_laurent_mode_negative_exponents():
    S = BivariateSeries({Fraction(0): {-1: Fraction(1), 1: Fraction(1)}}, 4,
                        laurent=True)
    sq = S * S
    assert sq.coeff(0, -2) == 1
    assert sq.coeff(0, 0) == 2
    assert sq.coeff(0, 2) == 1


def test_kernel_root_annihilates_kernel():
    # the small root of 1 - u + t^2 u^2 counts bounded walks: odd Catalans
    N = 12
    U = PuiseuxSeries.from_terms({Fraction(1): 1}, N)
    for _ in range(N):
        # Newton iteration on K(t,u) = t u^2 - u + t
        num = U * U * PuiseuxSeries.t_power(1, order=N) - U + PuiseuxSeries.t_power(1, order=N)
        den = U * PuiseuxSeries.t_power(1, order=N) * 2 - PuiseuxSeries.const(1, N)
        U = U - num / den
    got = [U.coeff(Fraction(n)) for n in range(1, 12, 2)]
    assert got == [1, 1, 2, 5, 14, 42]
