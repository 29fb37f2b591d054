"""Built-in equations and the larger model constructions.

The small catalogue lives in ``corpus_data/*.eq`` and is loaded through
:func:`load_builtin`.  This module also builds the parameterized families
that are too repetitive to write by hand: the degree-m generalization of
the cubic map equation (driven by non-crossing partitions), the
face-distribution equation for bounded face degrees, and the
hard-particle pair pre-eliminated to a single cubic.  For the last two
it provides the direct fixed-point solutions used as cross-checks
against the catalytic-equation machinery.
"""

from fractions import Fraction
from pathlib import Path

import sympy as sp

from .equations import (
    CatalyticEquation,
    SeriesSolution,
    SolveError,
    UnknownBinding,
    compose_series,
    parse_equation,
)
from .scalars import normalize_scalar
from .series import BivariateSeries, PuiseuxSeries


def _normalized(ps):
    """Re-normalize symbolic coefficients; keeps fixed points from
    accumulating unexpanded products."""
    return PuiseuxSeries({e: normalize_scalar(c)
                          for e, c in ps.coeffs.items()}, ps.order)

_DATA = Path(__file__).parent / "corpus_data"


# ---------------------------------------------------------------------------
# the catalogue
# ---------------------------------------------------------------------------

def builtin_names():
    """Names of the equations shipped as DSL files."""
    return sorted(p.stem for p in _DATA.glob("*.eq"))


def builtin_source(name):
    path = _DATA / f"{name}.eq"
    if not path.exists():
        raise KeyError(f"no builtin equation named {name!r}")
    return path.read_text()


def load_builtin(name):
    return parse_equation(builtin_source(name), name=name)


# ---------------------------------------------------------------------------
# non-crossing partitions
# ---------------------------------------------------------------------------

def noncrossing_partitions(m):
    """All non-crossing partitions of {1, ..., m}, each a list of sorted
    tuples ordered by their minimum."""
    out = []

    def extend(parts, nxt):
        if nxt > m:
            out.append([tuple(b) for b in parts])
            return
        # open a new block
        extend(parts + [[nxt]], nxt + 1)
        # or append nxt to an existing block, provided no block "crosses":
        # a block may only be extended if no block opened after it is
        # still extendable below nxt -- equivalently, appending nxt to
        # block b is allowed when every element of every other block lies
        # entirely inside or outside the gap (max b, nxt).
        for i, b in enumerate(parts):
            ok = True
            for j, other in enumerate(parts):
                if i == j:
                    continue
                inside = [e for e in other if b[-1] < e < nxt]
                if inside and inside != list(other):
                    ok = False
                    break
            if ok:
                extend(parts[:i] + [b + [nxt]] + parts[i + 1:], nxt + 1)

    extend([], 1)
    out.sort()
    return out


def is_internal(block, partition):
    """A block is internal when another block strictly encloses it."""
    lo, hi = min(block), max(block)
    for other in partition:
        if tuple(other) == tuple(block):
            continue
        if min(other) < lo and hi < max(other):
            return True
    return False


def block_profile(partition, m):
    """(internal_counts, external_counts) by block size, indexed 1..m."""
    internal = [0] * (m + 1)
    external = [0] * (m + 1)
    for block in partition:
        if is_internal(block, partition):
            internal[len(block)] += 1
        else:
            external[len(block)] += 1
    return internal, external


# ---------------------------------------------------------------------------
# the degree-m map equation
# ---------------------------------------------------------------------------

def _derivative_unknown(i):
    """DSL text of the i-th derivative-at-1 unknown."""
    return "F" + "'" * i + "(1)"


def _g_text(i):
    """DSL text of the i-th Taylor coefficient of F at u = 1."""
    fact = sp.factorial(i)
    base = _derivative_unknown(i)
    return base if fact == 1 else f"({base}/{fact})"


def constellation_equation(m, name=None):
    """Catalytic equation for maps whose black faces have degree m and
    white faces degree divisible by m, from the block structure of
    non-crossing partitions.  m = 2 gives the bipartite-map equation and
    m = 3 the cubic two-unknown equation of the catalogue."""
    if m < 2:
        raise ValueError("need m >= 2")
    terms = []
    for partition in noncrossing_partitions(m):
        internal, external = block_profile(partition, m)
        factors = []
        for k in range(1, m):
            factors.extend([_g_text(k - 1)] * internal[k])
        for k in range(1, m + 1):
            if not external[k]:
                continue
            if k == 1:
                piece = "F"
            else:
                top = "F" + "".join(
                    f" - (u - 1)^{i}*{_g_text(i)}" if i else f" - {_g_text(i)}"
                    for i in range(k - 1))
                piece = f"(({top})/(u - 1)^{k - 1})"
            factors.extend([piece] * external[k])
        terms.append("*".join(factors))
    rhs = "1 + t*u*(" + " + ".join(terms) + ")"
    unknowns = ", ".join(_derivative_unknown(i) for i in range(m - 1))
    text = f"vars: t u\nunknowns: {unknowns}\nequation: F = {rhs}\n"
    return parse_equation(text, name=name or f"constellation_{m}")


# ---------------------------------------------------------------------------
# face distribution of planar maps
# ---------------------------------------------------------------------------

def face_distribution_equation(m, name=None):
    """Planar maps whose finite faces have degree at most m, by edges,
    outer degree, and one weight per finite-face degree."""
    if m < 3:
        raise ValueError("need m >= 3")
    pieces = ["z1*u*F", "z2*F"]
    for i in range(3, m + 1):
        top = "F" + "".join(f" - u^{j}*coeff(F,u,{j})" if j else
                            " - coeff(F,u,0)" for j in range(i - 1))
        pieces.append(f"z{i}*({top})/u^{i - 2}")
    rhs = "1 + t*u^2*F^2 + t*(" + " + ".join(pieces) + ")"
    unknowns = ", ".join(f"coeff(F,u,{j})" for j in range(m - 1))
    weights = " ".join(f"z{i}" for i in range(1, m + 1))
    text = (f"vars: t u\nunknowns: {unknowns}\nweights: {weights}\n"
            f"equation: F = {rhs}\n")
    return parse_equation(text, name=name or f"face_dist_{m}")


def _embed(ps, u_exp, scale=1):
    """A PuiseuxSeries times u^u_exp, as a BivariateSeries."""
    coeffs = {}
    for e, c in ps.coeffs.items():
        coeffs[e] = {u_exp: c * scale if scale != 1 else c}
    return BivariateSeries(coeffs, ps.order)


class FaceDistState:
    """The auxiliary pair (R1, R2), the series R(t, u) they build, and the
    face-count series G, all mod t^order."""

    def __init__(self, weights, r1, r2, g, rinvhalf, order):
        self.weights = dict(weights)
        self.r1 = r1
        self.r2 = r2
        self.g = g
        self.rinvhalf = rinvhalf
        self.order = order

    def R(self):
        one = BivariateSeries.const(1, self.order)
        return one - _embed(self.r1, 1, 4) - _embed(self.r2, 2, 4)

    def beta_over_sqrt_R(self, u_exp):
        """[u^u_exp] of (sum_i z_i u^{-i}) / sqrt(R)."""
        total = PuiseuxSeries.zero(self.order)
        for i, zi in self.weights.items():
            total = total + self.rinvhalf.u_coeff_series(u_exp + i) * zi
        return total


def face_distribution_solve(weights, N):
    """Fixed point of the pair of equations that determine (R1, R2) for a
    finite set of face weights, together with the resulting G."""
    weights = {int(i): w for i, w in dict(weights).items()}
    half = Fraction(1, 2)
    r1 = PuiseuxSeries.zero(N)
    r2 = PuiseuxSeries.zero(N)
    t1 = PuiseuxSeries.t_power(1, order=N)
    rinvhalf = None
    for _ in range(N + 1):
        R = (BivariateSeries.const(1, N) - _embed(r1, 1, 4)
             - _embed(r2, 2, 4))
        rinvhalf = R.sqrt().unit_inverse()
        n1 = PuiseuxSeries.zero(N)
        n2 = PuiseuxSeries.zero(N)
        for i, zi in weights.items():
            n1 = n1 + rinvhalf.u_coeff_series(i - 1) * zi
            n2 = n2 + rinvhalf.u_coeff_series(i) * zi
        n1 = n1.t_shift(1) * half
        n2 = t1 - r1 * r1 * 3 + n2.t_shift(1) * half
        n1 = _normalized(n1)
        n2 = _normalized(n2)
        if n1.eq_mod(r1, N) and n2.eq_mod(r2, N):
            r1, r2 = n1, n2
            break
        r1, r2 = n1, n2
    state = FaceDistState(weights, r1, r2, None, rinvhalf, N)
    a1 = state.beta_over_sqrt_R(1)
    a2 = state.beta_over_sqrt_R(2)
    s = r2 + r1 * r1
    tg = (s * (r2 * 3 + r1 * r1 * 15 - t1 * 2)).t_shift(-1) \
        + r1 * a1 - a2 * half
    state.g = tg.t_shift(-1)
    return state


# ---------------------------------------------------------------------------
# the Laurent form of the same fixed point
# ---------------------------------------------------------------------------

def _laurent_mul(A, B, order):
    out = {}
    for j, a in A.items():
        for k, b in B.items():
            p = a * b
            if j + k in out:
                out[j + k] = out[j + k] + p
            else:
                out[j + k] = p
    return {j: s.truncate(order) for j, s in out.items()}


class BdgState:
    """The pair (S1, S2) defined through a Laurent variable, and the
    resulting G.  ``pk_w(k)`` returns P^k W as a dict of v-exponent to
    series, so coefficient identities can be read off directly."""

    def __init__(self, weights, s1, s2, order):
        self.weights = dict(weights)
        self.s1 = s1
        self.s2 = s2
        self.order = order
        self.g = None

    def P(self):
        one = PuiseuxSeries.const(1, self.order)
        return {1: one, 0: self.s1, -1: self.s2}

    def W(self):
        P = self.P()
        acc = {0: PuiseuxSeries.const(1, self.order)}
        W = {}
        for i in range(1, max(self.weights) + 1):
            zi = self.weights.get(i, 0)
            if zi:
                for j, c in acc.items():
                    term = c * zi
                    W[j] = W[j] + term if j in W else term
            acc = _laurent_mul(acc, P, self.order)
        return W

    def pk_w(self, k):
        out = self.W()
        P = self.P()
        for _ in range(k):
            out = _laurent_mul(out, P, self.order)
        return out

    def coeff(self, j, k=0):
        """[v^j] P^k W as a series in t."""
        got = self.pk_w(k).get(j)
        return got if got is not None else PuiseuxSeries.zero(self.order)


def bdg_solve(weights, N):
    """Fixed point for (S1, S2) in the Laurent formulation, with G."""
    weights = {int(i): w for i, w in dict(weights).items()}
    zero = PuiseuxSeries.zero(N)
    t1 = PuiseuxSeries.t_power(1, order=N)
    state = BdgState(weights, zero, zero, N)
    for _ in range(N + 1):
        W = state.W()
        s1 = W.get(0, zero).t_shift(1)
        s2 = t1 + W.get(-1, zero).t_shift(1)
        s1 = _normalized(s1)
        s2 = _normalized(s2)
        if s1.eq_mod(state.s1, N) and s2.eq_mod(state.s2, N):
            state.s1, state.s2 = s1, s2
            break
        state.s1, state.s2 = s1, s2
    W = state.W()
    tg = (state.s1 * state.s1 + state.s2
          - state.s1 * W.get(-2, zero) * 2 - W.get(-3, zero))
    state.g = tg.t_shift(-1)
    return state


# ---------------------------------------------------------------------------
# hard particles on planar maps
# ---------------------------------------------------------------------------

def _truncate_t(expr, t, N):
    kept = []
    for term in sp.Add.make_args(sp.expand(expr)):
        if sp.degree(term, t) < N:
            kept.append(term)
    return sp.Add(*kept)


def _to_bivariate(expr, t, u, N):
    coeffs = {}
    for term in sp.Add.make_args(sp.expand(expr)):
        c = term
        a = sp.degree(term, t) if term.has(t) else 0
        b = sp.degree(term, u) if term.has(u) else 0
        c = sp.cancel(term / (t**a * u**b))
        layer = coeffs.setdefault(Fraction(int(a)), {})
        prev = layer.get(int(b), 0)
        layer[int(b)] = prev + (Fraction(int(c)) if c.is_Integer else c)
    return BivariateSeries(coeffs, N)


def _hard_particle_solver(s_expr):
    def solver(eq, N):
        t, u = sp.symbols("t u")
        # every non-constant term of the pair carries a factor t, so the
        # t^n layers follow by direct recurrence (occupied-root layer
        # first: it only needs layers below n)
        f = [sp.Integer(1)]
        g = [sp.Integer(1)]
        for n in range(1, N):
            conv_fg = sum(f[a] * g[n - 1 - a] for a in range(n))
            gd = sp.cancel(sp.expand(g[n - 1] - g[n - 1].subs(u, 1))
                           / (u - 1))
            g.append(sp.expand(s_expr * u * (conv_fg + gd)))
            conv_ff = sum(f[a] * f[n - 1 - a] for a in range(n))
            fd = sp.cancel(sp.expand(u * f[n - 1]
                                     - f[n - 1].subs(u, 1)) / (u - 1))
            f.append(sp.expand(g[n] + u**2 * conv_ff + u * fd))
        F = sp.Add(*[t**n * f[n] for n in range(N)])
        G = sp.Add(*[t**n * g[n] for n in range(N)])
        Fb = _to_bivariate(F, t, u, N)
        Gb = _to_bivariate(G, t, u, N)
        sol = SeriesSolution(eq, Fb, [Fb.eval_u(1), Gb.eval_u(1)], N)
        # the recurrence enforces the original pair of equations layer by
        # layer; the residual of the pre-eliminated cubic is checked at a
        # rational weight (the symbolic check is exact too, just slow)
        if s_expr.free_symbols:
            probe = Fraction(5, 7)
            res = SeriesSolution(
                eq, _subs_weight(Fb, s_expr, probe),
                [_subs_weight_ps(x, s_expr, probe) for x in sol.unknowns],
                N)
            res = compose_series(
                eq.poly_expr().subs(s_expr, sp.Rational(5, 7)),
                {eq.x[0]: res.F, eq.x[1]: res.unknowns[0],
                 eq.x[2]: res.unknowns[1]},
                N, t=eq.t, v=eq.v)
        else:
            res = sol.residual()
        if not res.is_zero_mod_order():
            raise SolveError("hard-particle iteration does not satisfy the "
                             "pre-eliminated cubic", order=res.t_valuation())
        return sol
    return solver


def _as_fraction(expr):
    r = sp.Rational(sp.cancel(expr))
    return Fraction(int(r.p), int(r.q))


def _subs_weight(B, sym, val):
    out = {}
    for e, sl in B.coeffs.items():
        out[e] = {j: c if isinstance(c, Fraction) else
                  _as_fraction(sp.sympify(c).subs(sym, sp.Rational(val)))
                  for j, c in sl.items()}
    return BivariateSeries(out, B.order)


def _subs_weight_ps(ps, sym, val):
    out = {}
    for e, c in ps.coeffs.items():
        out[e] = c if isinstance(c, Fraction) else \
            _as_fraction(sp.sympify(c).subs(sym, sp.Rational(val)))
    return PuiseuxSeries(out, ps.order)


def hard_particle_equation(s=None, name="hard_particles"):
    """Maps with vertices either vacant or occupied (no two occupied
    neighbours), rooted at a vacant vertex.  The companion series rooted
    at an occupied vertex is linear in the pair of equations, so it is
    eliminated up front; what remains is a cubic for F(u) whose unknowns
    are F(1) and the occupied-root count at u = 1.  Pass a number for the
    frustrated-edge weight s to specialize, or leave it symbolic."""
    t, v = sp.Symbol("t"), sp.Symbol("v")
    x0, x1, x2 = sp.symbols("x0 x1 x2")
    s_expr = sp.Symbol("s") if s is None else sp.sympify(s)
    G = ((v - 1) - t * s_expr * v * x2) / \
        ((v - 1) * (1 - t * s_expr * v * x0) - t * s_expr * v)
    expr = x0 - G - t * v**2 * x0**2 - t * v * (v * x0 - x1) / (v - 1)
    numer, _ = sp.fraction(sp.together(sp.cancel(expr)))
    bindings = [UnknownBinding("value", 1, a=1),
                UnknownBinding("aux", 2)]
    weights = (sp.Symbol("s"),) if s is None else ()
    return CatalyticEquation(sp.expand(numer), bindings, weights=weights,
                             name=name, aux_solver=_hard_particle_solver(s_expr))


def hard_particle_T(N, s=None):
    """The series T(t) with T(1-2T)(s-3T+3T^2) = s^2 t, mod t^N, as a
    sympy polynomial in t (coefficients polynomial in s)."""
    t = sp.Symbol("t")
    s_expr = sp.Symbol("s") if s is None else sp.sympify(s)

    # Work with integer coefficient lists in s (index = power of s); the
    # expanded equation reads s*T - (3 + 2s)*T^2 + 9*T^3 - 6*T^4 = s^2 t,
    # so layer n of T comes from lower layers of T^2, T^3, T^4 after an
    # exact division by s.
    def pmul(A, B):
        out = [0] * (len(A) + len(B) - 1)
        for i, ai in enumerate(A):
            if ai:
                for j, bj in enumerate(B):
                    out[i + j] += ai * bj
        return out

    def padd(acc, B, scale=1):
        if len(B) > len(acc):
            acc.extend([0] * (len(B) - len(acc)))
        for j, bj in enumerate(B):
            acc[j] += scale * bj
        return acc

    a = {1: [0, 1]}       # T = s*t + ...
    a2 = {}               # t-layers of T^2
    a3 = {}               # t-layers of T^3
    for n in range(2, N + 1):
        m = n - 1
        if m >= 2:
            lay = [0]
            for i in range(1, m):
                padd(lay, pmul(a[i], a[m - i]))
            a2[m] = lay
        if m >= 3:
            lay = [0]
            for i in range(1, m - 1):
                padd(lay, pmul(a[i], a2[m - i]))
            a3[m] = lay
        top = [0]
        for i in range(1, n):
            padd(top, pmul([3, 2], pmul(a[i], a[n - i])))
        for i in range(1, n - 1):
            padd(top, pmul(a[i], a2[n - i]), -9)
        for i in range(1, n - 2):
            padd(top, pmul(a[i], a3[n - i]), 6)
        if top[0]:
            raise ValueError("layer not divisible by s")
        a[n] = top[1:]

    terms = []
    for n, lay in a.items():
        if n > N:
            continue
        coeff = sp.Add(*[sp.Integer(c) * s_expr**k
                         for k, c in enumerate(lay) if c])
        if coeff != 0:
            terms.append(coeff * t**n)
    return sp.expand(sp.Add(*terms))


def hard_particle_closed_forms(T, s=None):
    """Right-hand sides of the closed forms: (s^3 t^2 F(1), s^4 t^2 G(1))
    expressed through the parameter series T."""
    s_expr = sp.Symbol("s") if s is None else sp.sympify(s)
    rhs_f = T**2 * (s_expr - 4 * T - 3 * s_expr * T + 15 * T**2
                    + s_expr * T**2 - 15 * T**3 + 4 * T**4)
    rhs_g = T**3 * (s_expr - 3 * T + 3 * T**2) * \
        (s_expr - 4 * T - 3 * s_expr * T + 14 * T**2 - 9 * T**3)
    return sp.expand(rhs_f), sp.expand(rhs_g)
