"""Newton-polygon machinery for bivariate series.

Counts and expands the Puiseux roots of Phi(t,u) that stay finite at t=0,
detects (or conjectures) multiplicities, and computes the canonical
factorization of a discriminant into zero / finite / infinity parts, each
normalized, together with the even-multiplicity check used to certify
square discriminants.
"""

from __future__ import annotations

import math
from fractions import Fraction

import sympy as sp

from .scalars import as_sympy, is_rational, normalize_scalar, scalar_is_zero, to_scalar
from .series import (
    INF,
    BivariateSeries,
    PuiseuxSeries,
    _sadd,
    _smul,
    _ssub,
)

_u = sp.Symbol("_newton_u")


class ExpansionError(ValueError):
    pass


class RootInfo:
    """One expanded root: the series, its multiplicity, and whether the
    multiplicity is only conjectured (truncation ran out before the
    branches could be separated)."""

    __slots__ = ("series", "multiplicity", "conjectured")

    def __init__(self, series, multiplicity, conjectured=False):
        self.series = series
        self.multiplicity = multiplicity
        self.conjectured = conjectured

    def __iter__(self):
        yield self.series
        yield self.multiplicity

    def __repr__(self):
        tag = ", conjectured" if self.conjectured else ""
        return f"RootInfo(mult={self.multiplicity}{tag}, {self.series.text()})"


class RootBundle:
    """All roots finite at t=0, plus the residual factor Psi with
    Phi = prod (u - U_i)^{m_i} * Psi modulo the working order."""

    def __init__(self, roots, residual_factor, order):
        self.roots = list(roots)
        self.residual_factor = residual_factor
        self.order = order

    @property
    def total_multiplicity(self):
        return sum(r.multiplicity for r in self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __repr__(self):
        return f"RootBundle({self.roots!r})"


def count_finite_roots(Phi: BivariateSeries) -> int:
    """deg_u Phi(0,u): the number of roots finite at t=0, with multiplicity."""
    s0 = Phi.slice(Fraction(0))
    if not s0:
        raise ValueError("constant slice vanishes: divide by t first")
    return max(s0)


# ---------------------------------------------------------------------------
# Newton polygon expansion
# ---------------------------------------------------------------------------

def _support_floor(Phi):
    """For each u-exponent, the least t-exponent carrying it."""
    floor = {}
    for e, sl in Phi.coeffs.items():
        for j in sl:
            if j not in floor or e < floor[j]:
                floor[j] = e
    return floor


def _lower_hull(points):
    """Lower convex hull of (j, e) points, j ascending."""
    pts = sorted(points)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] when p is below or on the segment
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _edge_roots(coeffs_on_edge):
    """Nonzero roots with multiplicity of sum c_i x^i given as {i: coeff}."""
    shift = min(coeffs_on_edge)
    expr = sp.Integer(0)
    for i, c in coeffs_on_edge.items():
        expr += as_sympy(c) * _u ** (i - shift)
    expr = sp.expand(expr)
    poly = sp.Poly(expr, _u)
    rmap = sp.roots(poly)
    if sum(rmap.values()) < poly.degree():
        rmap = {}
        for r in poly.all_roots():
            rmap[r] = rmap.get(r, 0) + 1
    if sum(rmap.values()) < poly.degree():
        raise ExpansionError("could not solve an initial (edge) equation exactly")
    out = []
    for r, m in rmap.items():
        if r == 0:
            continue
        out.append((normalize_scalar(sp.nsimplify(sp.radsimp(r))), m))
    return out


def _shift_scale(Phi, mu, c):
    """Phi(t, t^mu * (c + w)) as a series in (t, w), fractional t allowed."""
    deg = Phi.u_degree() or 0
    # (c + w)^j expanded as u-slices
    pows = [{0: Fraction(1)}]
    base = {0: to_scalar(c), 1: Fraction(1)}
    for _ in range(deg):
        prev = pows[-1]
        nxt = {}
        for j1, c1 in prev.items():
            for j2, c2 in base.items():
                j = j1 + j2
                p = _smul(c1, c2)
                nxt[j] = _sadd(nxt[j], p) if j in nxt else p
        pows.append(nxt)
    out = {}
    order = Phi.order
    for e, sl in Phi.coeffs.items():
        for j, coeff in sl.items():
            ee = e + mu * j
            if ee >= order:
                continue
            for jw, cw in pows[j].items():
                p = _smul(coeff, cw)
                dst = out.setdefault(ee, {})
                dst[jw] = _sadd(dst[jw], p) if jw in dst else p
    return BivariateSeries(out, order)


def _newton_refine(Phi, U, N):
    """Newton iteration for a simple root, doubling t-adic precision.

    The returned expansion is truncated to the order actually certified:
    perturbing Phi at t^N moves a simple root by O(t^{N-v}) where v is the
    valuation of Phi_u at the root.
    """
    dPhi = Phi.u_derivative()
    steps = max(4, int(math.ceil(math.log2(max(float(N), 2)))) + 3)
    den = None
    for _ in range(steps):
        num = Phi.substitute_u(U)
        den = dPhi.substitute_u(U)
        if num.is_zero_mod_order():
            break
        U = (U - num / den).truncate(N)
    v = den.valuation() if den is not None else None
    certified = N - v if v is not None else N
    return U.truncate(min(N, certified))


def _expand_positive(Phi, depth=0):
    """Roots of Phi with strictly positive valuation, with sound precision.

    Truncation hides every support point with t-exponent >= Phi.order.  An
    edge of the visible Newton polygon is trusted only when its extended
    line stays strictly below the hidden region over all columns to its
    left; otherwise the hidden coefficients could merge into the edge and
    change its initial equation, so the unprocessed roots are reported as a
    conjectured bundle 0 + O(t^v) with the best valuation bound the polygon
    still guarantees.
    """
    if depth > 60:
        raise ExpansionError("Newton polygon recursion too deep")
    order = Phi.order
    if Phi.is_zero_mod_order() or order <= 0:
        return None  # cannot see anything at this precision
    floor = _support_floor(Phi)
    hull = _lower_hull(floor.items())
    edges = [(p1, p2) for p1, p2 in zip(hull, hull[1:]) if p2[1] < p1[1]]
    roots = []
    # right to left: shallow (small valuation) edges are certified first
    for (j1, e1), (j2, e2) in reversed(edges):
        mu = Fraction(e1 - e2, j2 - j1)
        hidden_hit = any(j not in floor and e1 + mu * (j1 - j) >= order
                         for j in range(0, j1 + 1))
        if hidden_hit:
            vbound = Fraction(order - e2, j2)
            roots.append(RootInfo(PuiseuxSeries.zero(vbound), j2, True))
            return roots
        edge = {}
        for j, e in floor.items():
            if j1 <= j <= j2 and e + mu * j == e1 + mu * j1:
                edge[j] = Phi.coeffs[e][j]
        for c, m in _edge_roots(edge):
            head = PuiseuxSeries.from_terms({mu: c}, order)
            if m == 1:
                roots.append(RootInfo(_newton_refine(Phi, head, order), 1, False))
                continue
            Psi = _shift_scale(Phi, mu, c)
            val = Psi.t_valuation()
            if val is None:
                roots.append(RootInfo(head.truncate(mu + Fraction(Psi.order - mu, m)),
                                      m, True))
                continue
            Psi = Psi.t_shift(-val)
            sub = _expand_positive(Psi, depth + 1)
            if sub is None or sum(r.multiplicity for r in sub) != m:
                roots.append(RootInfo(head, m, True))
                continue
            for r in sub:
                tail = r.series * PuiseuxSeries.t_power(mu, order=INF)
                roots.append(RootInfo((head + tail).truncate(min(order, mu + r.series.order)),
                                      r.multiplicity, r.conjectured))
    # roots hidden entirely to the left of the visible support
    jmin = hull[0][0]
    if jmin > 0:
        vbound = Fraction(order - hull[0][1], jmin)
        roots.append(RootInfo(PuiseuxSeries.zero(vbound), jmin, True))
    return roots


def expand_roots(Phi: BivariateSeries, N) -> RootBundle:
    """All roots finite at t=0 to order N, via the Newton polygon."""
    k = count_finite_roots(Phi)
    Phi = Phi.truncate(N)
    s0 = Phi.slice_expr(Fraction(0), _u)
    roots = []
    # roots at u=0 and with positive valuation
    got = _expand_positive(Phi)
    roots.extend(got or [])
    # roots at each nonzero alpha of Phi(0,u)
    content, factors = sp.factor_list(sp.expand(s0), _u)
    for base, exp in factors:
        poly = sp.Poly(base, _u)
        if poly.degree() == 0:
            continue
        rmap = sp.roots(poly)
        if sum(rmap.values()) < poly.degree():
            rmap = {r: 1 for r in poly.all_roots()}
        for alpha in rmap:
            if alpha == 0:
                continue
            alpha = normalize_scalar(sp.nsimplify(sp.radsimp(alpha)))
            shifted = Phi.shift_u_by(alpha)
            got = _expand_positive(shifted)
            if got is None:
                got = [RootInfo(PuiseuxSeries.zero(N), exp, True)]
            for r in got:
                U = (r.series + PuiseuxSeries.const(alpha, order=N)).truncate(N)
                roots.append(RootInfo(U, r.multiplicity, r.conjectured))
    total = sum(r.multiplicity for r in roots)
    if total != k:
        raise ExpansionError(
            f"found {total} roots with multiplicity, expected {k}")
    # residual factor by repeated deflation
    Psi = Phi
    for r in roots:
        for _ in range(r.multiplicity):
            Psi = Psi.deflate(r.series)
    return RootBundle(roots, Psi, N)


# ---------------------------------------------------------------------------
# canonical factorization
# ---------------------------------------------------------------------------

class CanonicalFactorization:
    """Delta = c * t^p * unit * infinity_factor * zero_factor * prod finite.

    unit = 1 + t S(t); infinity_factor = 1 + t u R1; zero_factor =
    u^d + t R2 with deg_u R2 < d; each finite factor is P_i(u)^{d_i} + t u Q_i
    with P_i normalized to constant term 1 (conjugate roots grouped so the
    factorization stays over the rationals).
    """

    def __init__(self, c, p, unit, infinity_factor, zero_factor,
                 finite_factors, order):
        self.c = c
        self.p = p
        self.unit = unit
        self.infinity_factor = infinity_factor
        self.zero_factor = zero_factor
        self.finite_factors = list(finite_factors)
        self.order = order

    def product(self):
        out = self.infinity_factor * self.zero_factor
        for f in self.finite_factors:
            out = out * f
        out = out * self.unit_as_bivariate()
        out = out * self.c
        return out.t_shift(self.p).truncate(self.order + self.p)

    def unit_as_bivariate(self):
        return BivariateSeries({e: {0: c} for e, c in self.unit.coeffs.items()},
                               self.unit.order)

    def text(self, uname="u"):
        parts = [f"c = {self.c}", f"p = {self.p}",
                 f"unit = {self.unit.text()}"]
        parts.append("infinity = " + self.infinity_factor.text(uname))
        parts.append("zero = " + self.zero_factor.text(uname))
        for i, f in enumerate(self.finite_factors, 1):
            parts.append(f"finite[{i}] = " + f.text(uname))
        return "\n".join(parts)


def _layer_poly(F, e):
    return F.slice_expr(Fraction(e), _u)


def _hensel_split(Delta, f0, N):
    """Split Delta = F * G with F(0,u) = f0 and G(0,u) = Delta(0,u)/f0,
    the two parts coprime at t=0.  Layers are lifted with the cofactor
    identity from the extended Euclidean algorithm; deg_u of every lifted
    F-layer stays below deg f0."""
    d0 = sp.expand(_layer_poly(Delta, 0))
    g0 = sp.expand(sp.cancel(d0 / f0))
    num, den = sp.fraction(sp.together(g0))
    if not den.is_number:
        raise ValueError("f0 does not divide the constant slice")
    g0 = sp.expand(num / den)
    s, tt, one = sp.gcdex(sp.Poly(f0, _u), sp.Poly(g0, _u))
    if one.degree() > 0:
        raise ValueError("parts are not coprime at t=0")
    s = sp.expand(s.as_expr() / one.as_expr())
    tt = sp.expand(tt.as_expr() / one.as_expr())
    lattice = 1
    for e in Delta.coeffs:
        lattice = lattice * e.denominator // math.gcd(lattice, e.denominator)
    F = {Fraction(0): f0}
    G = {Fraction(0): g0}
    steps = int(math.ceil(N * lattice))
    for n in range(1, steps):
        e = Fraction(n, lattice)
        if e >= N:
            break
        # residue r = [t^e](Delta - F G)
        r = _layer_poly(Delta, e)
        for ef, pf in F.items():
            eg = e - ef
            if eg in G:
                r -= pf * G[eg]
        r = sp.expand(r)
        if r == 0:
            continue
        dF = sp.rem(sp.expand(tt * r), f0, _u)
        dG = sp.expand(sp.cancel((r - dF * g0) / f0))
        numq, denq = sp.fraction(sp.together(dG))
        if not denq.is_number:
            raise ValueError(f"lift failed at t^{e}")
        dG = sp.expand(numq / denq)
        if dF != 0:
            F[e] = sp.expand(F.get(e, sp.Integer(0)) + dF)
        if dG != 0:
            G[e] = sp.expand(G.get(e, sp.Integer(0)) + dG)
    Fc, Gc = {}, {}
    for e, p in F.items():
        sl = _poly_to_slice(p)
        if sl:
            Fc[e] = sl
    for e, p in G.items():
        sl = _poly_to_slice(p)
        if sl:
            Gc[e] = sl
    return BivariateSeries(Fc, N), BivariateSeries(Gc, N)


def _poly_to_slice(expr):
    expr = sp.expand(expr)
    if expr == 0:
        return {}
    out = {}
    for (j,), c in sp.Poly(expr, _u).terms():
        out[j] = normalize_scalar(c)
    return out


def canonical_factorization(Delta: BivariateSeries, N) -> CanonicalFactorization:
    if Delta.is_zero_mod_order():
        raise ValueError("zero series has no canonical factorization")
    p = Delta.t_valuation()
    work = Delta.t_shift(-p).truncate(N)
    s0 = sp.expand(work.slice_expr(Fraction(0), _u))
    _, factors = sp.factor_list(s0, _u)
    d = 0
    finite_bases = []
    for base, exp in factors:
        poly = sp.Poly(base, _u)
        if poly.degree() == 0:
            continue
        if base == _u:
            d = exp
        else:
            finite_bases.append((sp.expand(base ** exp), exp))
    rest = work
    zero_factor = None
    if d > 0:
        zero_factor, rest = _hensel_split(rest, _u ** d, N)
    finite = []
    for f0, exp in finite_bases:
        Fpart, rest = _hensel_split(rest, f0, N)
        # normalize to constant term 1 in u; the unit pulled out moves
        # into the remaining u-free part
        head = _pseries_as_bivariate(Fpart.eval_u(0), N)
        finite.append(Fpart.divide(head))
        rest = rest * head
    if zero_factor is None:
        zero_factor = BivariateSeries.const(1, N)
    # what is left is c * unit(t) * (1 + t u R1)
    c = normalize_scalar(rest.coeff(0, 0))
    unit = rest.eval_u(0) * (Fraction(1) / c if is_rational(c) else 1 / as_sympy(c))
    infinity = rest.divide(_pseries_as_bivariate(rest.eval_u(0), N))
    return CanonicalFactorization(c, p, unit.truncate(N), infinity,
                                  zero_factor, finite, N)


def _pseries_as_bivariate(S, order):
    return BivariateSeries({e: {0: c} for e, c in S.coeffs.items()},
                           min(S.order, order))


# ---------------------------------------------------------------------------
# even-multiplicity check
# ---------------------------------------------------------------------------

def even_multiplicity_check(Delta: BivariateSeries, mode="finite"):
    """True iff every root in the selected class ("at-zero" for roots
    vanishing at t=0, "finite" for all roots finite at t=0) has even
    multiplicity.  Returns (ok, witness): the witness is the offending
    root's expansion when ok is False."""
    if mode not in ("at-zero", "finite"):
        raise ValueError("mode must be 'at-zero' or 'finite'")
    p = Delta.t_valuation()
    work = Delta.t_shift(-p) if p != 0 else Delta
    bundle = expand_roots(work, work.order)
    for r in bundle.roots:
        if mode == "at-zero" and r.series.valuation() is not None:
            if r.series.valuation() <= 0:
                continue
        if r.multiplicity % 2:
            return False, r
    return True, None
