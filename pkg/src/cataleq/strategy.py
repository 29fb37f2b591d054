"""Solving pipelines for polynomial equations with one catalytic variable.

The builders turn an equation into a polynomial system with a series
witness: the root-evaluation system (3k relations), the discriminant
system (2k vanishing conditions), the truncated-Sylvester determinant
conditions, and the linear (kernel) and quadratic shortcuts.  `eliminate`
projects such a system onto one unknown by iterated resultants, stripping
trivial factors and selecting components by evaluating them on the
witness; the accepted candidate is packaged as a Certificate.
"""

import itertools
from fractions import Fraction

import sympy as sp

from .algebra import (
    MPoly,
    NotAFactor,
    algebraic_approximant,
    content_normalize,
    discriminant,
    exact_divide,
    resultant,
    sk_matrix,
)
from .equations import compose_series, solve_series
from .newton import canonical_factorization, count_finite_roots, expand_roots
from .series import BivariateSeries, PuiseuxSeries


class StrategyError(RuntimeError):
    """A pipeline step could not proceed."""


class NonGenericError(StrategyError):
    """Root count does not match the unknown count (or roots collide)."""


class AmbiguousError(StrategyError):
    """More than one minimal candidate survives component selection."""


class OrderTooLowError(StrategyError):
    """The witness order is too small to classify a factor; retry higher."""


class VerificationError(StrategyError):
    """A candidate failed certification against the witness."""


# ---------------------------------------------------------------------------
# certificates and systems
# ---------------------------------------------------------------------------

class Certificate:
    """An annihilating polynomial for one unknown, certified on the witness.

    candidate divides eliminant exactly, is primitive with positive leading
    coefficient, and annihilates the unknown's series to residual_valuation
    (which is at least n_min = 2 * total degree + 8).
    """

    def __init__(self, target, candidate, eliminant, residual_valuation,
                 *, n_min=None, minimal=None, trace=None):
        self.target = target
        self.candidate = candidate          # MPoly in (t, target)
        self.eliminant = eliminant          # MPoly the candidate divides
        self.residual_valuation = residual_valuation
        self.n_min = n_min
        self.minimal = minimal              # True/False/None (not claimed)
        self.trace = trace or []

    def candidate_expr(self):
        return self.candidate.as_expr()

    def text(self):
        return self.candidate.text()

    def __repr__(self):
        return (f"Certificate({self.target}: {self.candidate.text()}, "
                f"residual >= t^{self.residual_valuation})")


class StrategySystem:
    """Polynomial relations plus a series witness for every symbol.

    equations: sympy relations over the unknown symbols (the equation's
    x1..xk, the root symbols U1..Uk, evaluation symbols W1..Wk, and the
    distinctness inverse X).  groups holds the per-root sublists.
    relations, when set, are consequences free of the root symbols
    (the kernel route's determinant conditions).
    """

    def __init__(self, eq, equations, witness, order, *, groups=None,
                 roots=None, U=(), W=(), relations=None, sol=None,
                 kind="", generic=True, trace=None):
        self.eq = eq
        self.equations = list(equations)
        self.witness = dict(witness)
        self.order = order
        self.groups = [list(g) for g in (groups or [])]
        self.roots = list(roots or [])
        self.U = tuple(U)
        self.W = tuple(W)
        self.relations = relations
        self.sol = sol
        self.kind = kind
        self.generic = generic
        self.trace = trace or []

    def residual(self, expr, order=None):
        return compose_series(expr, self.witness, order or self.order,
                              t=self.eq.t, v=self.eq.v)

    def residual_orders(self):
        """Check every equation vanishes on the witness; return the orders."""
        out = []
        for e in self.equations:
            if e.has(_X):
                # the distinctness inverse is built as an exact series
                # inverse; nothing further to check
                continue
            r = self.residual(e)
            if not r.is_zero_mod_order():
                if r.t_valuation() >= self.order - 2:
                    # failure within two layers of the truncation is a
                    # precision artifact, not a refutation
                    raise OrderTooLowError(
                        f"witness residual nonzero only near the truncation "
                        f"(t^{r.t_valuation()} at order {self.order}); "
                        "raise the order")
                raise StrategyError(
                    f"system equation fails on witness at t^{r.t_valuation()}")
            out.append(r.order)
        return out

    def __repr__(self):
        return (f"StrategySystem({self.kind}, {len(self.equations)} equations, "
                f"order {self.order})")


# ---------------------------------------------------------------------------
# witness helpers
# ---------------------------------------------------------------------------

def _composed_subs(eq, sol):
    subs = {eq.x[0]: sol.F}
    for i, s in enumerate(sol.unknowns, start=1):
        subs[eq.x[i]] = s
    return subs


def _composed_x0_derivative(eq, sol, N):
    """P'_{x0} evaluated at the solution, with any pure t power removed."""
    P0 = sp.expand(sp.diff(eq.poly_expr(), eq.x[0]))
    Phi = compose_series(P0, _composed_subs(eq, sol), N, t=eq.t, v=eq.v)
    p = Phi.t_valuation()
    if p is None:
        raise NonGenericError("derivative in the main unknown vanishes "
                              "identically on the solution")
    return Phi.t_shift(-p) if p else Phi


def _sorted_roots(bundle):
    return sorted(bundle.roots,
                  key=lambda r: (r.series.valuation() is None,
                                 r.series.valuation() or Fraction(0),
                                 r.series.text()))


def _root_symbols(k):
    U = sp.symbols(f"U1:{k + 1}")
    W = sp.symbols(f"W1:{k + 1}")
    return (U if isinstance(U, tuple) else (U,),
            W if isinstance(W, tuple) else (W,))


_X = sp.Symbol("X")


def _distinctness(U, witness):
    """X * prod (U_i - U_j) - 1, with the inverse adjoined to the witness."""
    prod_expr = sp.Integer(1)
    prod_ser = None
    for i, j in itertools.combinations(range(len(U)), 2):
        prod_expr *= (U[i] - U[j])
        d = witness[U[i]] - witness[U[j]]
        prod_ser = d if prod_ser is None else prod_ser * d
    witness[_X] = prod_ser.inverse()
    return sp.expand(_X * prod_expr - 1)


# ---------------------------------------------------------------------------
# elimination context: resultants + strip/select on the witness
# ---------------------------------------------------------------------------

class _ElimCtx:
    def __init__(self, eq, witness, order, trace=None, floor=None):
        self.eq = eq
        self.witness = witness
        self.order = order
        self.trace = trace if trace is not None else []
        self.floor = floor if floor is not None else max(6, order // 4)

    def residual(self, expr):
        return compose_series(expr, self.witness, self.order,
                              t=self.eq.t, v=self.eq.v)

    def vanishing_part(self, expr, note):
        """Keep the (squarefree) product of factors vanishing on the witness."""
        expr = sp.expand(expr)
        if expr == 0:
            raise StrategyError(f"{note}: relation degenerated to zero")
        _, factors = sp.factor_list(expr)
        kept, stripped = [], []
        for base, mult in factors:
            r = self.residual(base)
            if r.is_zero_mod_order():
                if r.order < self.floor:
                    raise OrderTooLowError(
                        f"{note}: factor undecidable at order {r.order}; "
                        "raise the order")
                kept.append(base)
            else:
                stripped.append((base, mult, r.t_valuation()))
        if not kept:
            raise OrderTooLowError(
                f"{note}: no factor vanishes on the witness; raise the order")
        out = sp.expand(sp.prod(kept))
        self.trace.append({
            "op": "select", "note": note,
            "stripped": [(str(b), m, str(v)) for b, m, v in stripped],
            "result": out,
        })
        return out

    def res(self, a, b, sym, note=""):
        r = resultant(a, b, sym)
        if sp.expand(r) == 0:
            # the relations share a factor; retry with the cofactors,
            # provided they still vanish on the witness
            g = sp.gcd(a, b)
            if g.is_number:
                raise StrategyError(
                    f"resultant in {sym} is identically zero; "
                    "supply an explicit plan")
            aa, bb = a, b
            a2, b2 = exact_divide(a, g), exact_divide(b, g)
            if not a2.is_number and self.residual(a2).is_zero_mod_order():
                aa = a2
            if not b2.is_number and self.residual(b2).is_zero_mod_order():
                bb = b2
            self.trace.append({"op": "split shared factor", "note": note,
                               "factor": g})
            if not (aa.has(sym) and bb.has(sym)):
                raise StrategyError(
                    f"resultant in {sym} degenerates after removing the "
                    f"shared factor; supply an explicit plan")
            r = resultant(aa, bb, sym)
            if sp.expand(r) == 0:
                raise StrategyError(
                    f"resultant in {sym} is identically zero; "
                    "supply an explicit plan")
        out = self.vanishing_part(r, note or f"resultant in {sym}")
        self.trace.append({"op": "resultant", "var": str(sym),
                           "note": note, "result": out})
        return out


def _sequential_eliminate(rels, plan, ctx):
    """Eliminate the plan symbols in order, pairing relations consecutively."""
    state = list(rels)
    for sym in plan:
        have = [r for r in state if r.has(sym)]
        rest = [r for r in state if not r.has(sym)]
        if not have:
            continue
        if len(have) == 1:
            raise StrategyError(
                f"cannot eliminate {sym}: only one relation mentions it")
        new = [ctx.res(a, b, sym, note=f"eliminate {sym}")
               for a, b in zip(have, have[1:])]
        state = rest + new
    return state


def _paired_eliminate(groups, Fs, U, target, ctx):
    """Two-root chain: split each root's pair along every unknown, then
    cross the roots.  Returns (final eliminant, per-root relation in the
    target, root-only relation)."""
    others = [f for f in Fs if f != target]
    if len(Fs) != 2 or len(groups) != 2:
        raise StrategyError("paired elimination needs two roots, two unknowns")
    f2 = others[0]
    T = {}
    for i, (a, b) in enumerate(groups):
        for f in Fs:
            T[(f, i)] = ctx.res(a, b, f, note=f"root {i + 1}: eliminate {f}")
    keep = T[(f2, 0)]   # still contains the target
    S = {}
    for f in Fs:
        rem = [g for g in Fs if g != f][0]
        S[f] = ctx.res(T[(f, 0)], T[(f, 1)], rem,
                       note=f"cross roots: eliminate {rem}")
    root_rel = ctx.res(S[f2], S[target], U[1],
                       note=f"eliminate {U[1]}")
    final = ctx.res(keep, root_rel, U[0], note=f"eliminate {U[0]}")
    return final, keep, root_rel


# ---------------------------------------------------------------------------
# candidate certification
# ---------------------------------------------------------------------------

def verify_candidate(candidate, witness, n_min, *, t=None, var=None):
    """True iff candidate(t, witness) = O(t^n_min) and the candidate is
    squarefree in the target variable."""
    expr = candidate.as_expr() if isinstance(candidate, MPoly) else \
        sp.expand(sp.sympify(candidate))
    if expr == 0:
        raise ValueError("zero candidate")
    t = t if t is not None else sp.Symbol("t")
    if var is None:
        syms = sorted(expr.free_symbols - {t}, key=str)
        if len(syms) != 1:
            raise ValueError("target variable is ambiguous; pass var=")
        var = syms[0]
    r = compose_series(expr, {var: witness}, n_min, t=t)
    if not (r.is_zero_mod_order() and r.order >= n_min):
        return False
    g = sp.gcd(expr, sp.diff(expr, var))
    return sp.degree(g, var) <= 0


def _rational_coeffs(series):
    """The integer-exponent coefficients of a witness series, as Fractions."""
    out = []
    n = 0
    while n < series.order:
        c = series.coeff(Fraction(n))
        c = sp.nsimplify(sp.sympify(c))
        if not c.is_Rational:
            return None
        out.append(Fraction(int(c.p), int(c.q)))
        n += 1
    return out


def _approximant_pick(vanishing, target, eq, wit, ctx):
    """Disambiguate between surviving factors via an annihilator guess."""
    coeffs = _rational_coeffs(wit)
    if coeffs is None:
        raise AmbiguousError("ambiguous, increase order "
                             "(symbolic weights block the approximant scan)")
    d_v_max = max(sp.degree(b, target) for b in vanishing)
    d_t_max = max(sp.degree(b, eq.t) for b in vanishing)
    prod = sp.expand(sp.prod(vanishing))
    best = None
    for total in range(2, d_v_max + d_t_max + 1):
        for d_v in range(1, min(total, d_v_max) + 1):
            d_t = total - d_v
            if d_t < 1 or d_t > d_t_max:
                continue
            try:
                A = algebraic_approximant(coeffs, (d_t, d_v), eq.t, target)
            except ValueError:
                continue
            if A is None:
                continue
            try:
                exact_divide(prod, A.as_expr())
            except NotAFactor:
                continue
            best = A.as_expr()
            break
        if best is not None:
            break
    if best is None:
        raise AmbiguousError("ambiguous, increase order")
    return best


def _certify(E, target, eq, wit, ctx, *, resolve=True, target_index=None):
    """Select the vanishing component of the eliminant E and certify it."""
    E = sp.expand(E)
    if E == 0:
        raise StrategyError("eliminant is identically zero")
    _, factors = sp.factor_list(E)
    vanishing, stripped = [], []
    for base, mult in factors:
        if not base.has(target):
            stripped.append((base, mult, "free of target"))
            continue
        r = ctx.residual(base)
        if r.is_zero_mod_order():
            if r.order < ctx.floor:
                raise OrderTooLowError(
                    f"eliminant factor undecidable at order {r.order}; "
                    "raise the order")
            vanishing.append(base)
        else:
            stripped.append((base, mult, f"t^{r.t_valuation()}"))
    if not vanishing:
        raise OrderTooLowError(
            "no component of the eliminant vanishes on the witness; "
            "raise the order")
    minimal = None
    if len(vanishing) == 1:
        cand = vanishing[0]
    else:
        cand = _approximant_pick(vanishing, target, eq, wit, ctx)
        minimal = True
    cand = content_normalize(cand, (eq.t, target))
    deg = sp.Poly(cand, eq.t, target).total_degree()
    n_min = 2 * deg + 8
    witness = wit
    if witness.order < n_min:
        if not resolve or target_index is None:
            raise OrderTooLowError(
                f"witness order {witness.order} below the certification "
                f"threshold {n_min}")
        sol = solve_series(eq, n_min + 2)
        witness = sol.unknowns[target_index - 1]
    if not verify_candidate(cand, witness, n_min, t=eq.t, var=target):
        raise VerificationError(
            f"candidate for {target} fails verification at order {n_min}")
    r = compose_series(cand, {target: witness}, witness.order, t=eq.t)
    residual_valuation = r.order
    ctx.trace.append({"op": "certify", "target": str(target),
                      "stripped": [(str(b), m, str(w)) for b, m, w in stripped],
                      "candidate": cand, "n_min": n_min})
    cand_mp = MPoly.from_expr(cand, (eq.t, target))
    elim_mp = MPoly.from_expr(content_normalize(E, (eq.t, target)),
                              tuple(dict.fromkeys(
                                  (eq.t, target)
                                  + tuple(sorted(E.free_symbols - {eq.t, target},
                                                 key=str)))))
    return Certificate(target, cand_mp, elim_mp, residual_valuation,
                       n_min=n_min, minimal=minimal, trace=ctx.trace)


# ---------------------------------------------------------------------------
# system builders
# ---------------------------------------------------------------------------

def build_3k_system(eq, N):
    """Root-evaluation system: for each root U_i of the composed x0-derivative,
    the equation, its x0-derivative and its v-derivative all vanish at
    (F(U_i), F_1, ..., F_k, t, U_i); plus pairwise root distinctness."""
    sol = solve_series(eq, N)
    P = eq.poly_expr()
    P0 = sp.expand(sp.diff(P, eq.x[0]))
    Pv = sp.expand(sp.diff(P, eq.v))
    Phi = _composed_x0_derivative(eq, sol, N)
    k = eq.k
    n = count_finite_roots(Phi)
    if n != k:
        raise NonGenericError(
            f"{n} roots finite at t=0 for {k} unknowns: "
            "non-generic; use multiplicity-aware path")
    bundle = expand_roots(Phi, N)
    roots = _sorted_roots(bundle)
    if any(r.multiplicity != 1 or r.conjectured for r in roots):
        raise NonGenericError(
            "multiple root detected: non-generic; use multiplicity-aware path")
    U, W = _root_symbols(k)
    witness = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, k + 1)}
    groups = []
    for i, r in enumerate(roots):
        rep = {eq.x[0]: W[i], eq.v: U[i]}
        groups.append([sp.expand(e.subs(rep)) for e in (P, P0, Pv)])
        witness[U[i]] = r.series
        witness[W[i]] = sol.F.substitute_u(r.series)
    equations = [e for g in groups for e in g]
    if k > 1:
        equations.append(_distinctness(U, witness))
    sys = StrategySystem(eq, equations, witness, N, groups=groups,
                         roots=roots, U=U, W=W, sol=sol, kind="3k")
    sys.residual_orders()
    return sys


def build_2k_system(eq, N):
    """Discriminant system: for each root U_i (multiplicity l_i) of the
    composed x0-derivative, the relevant factor of the discriminant and its
    first 2*l_i - 1 v-derivatives vanish at U_i."""
    if eq.x0_degree < 2:
        raise StrategyError(
            "equation is linear in the main unknown: use kernel_method")
    sol = solve_series(eq, N)
    P = eq.poly_expr()
    Delta = discriminant(P, eq.x[0])
    Phi = _composed_x0_derivative(eq, sol, N)
    bundle = expand_roots(Phi, N)
    roots = _sorted_roots(bundle)
    k = eq.k
    U, _ = _root_symbols(len(roots))
    witness = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, k + 1)}
    trace = []
    groups = []
    relevant = []
    for i, r in enumerate(roots):
        witness[U[i]] = r.series
        local = dict(witness)
        local[eq.v] = r.series
        ctx = _ElimCtx(eq, local, N, trace,
                       floor=max(4, min(N // 4, int(r.series.order) - 2)))
        rel = ctx.vanishing_part(
            Delta, note=f"discriminant factors at root {i + 1}")
        relevant.append(rel)
        conds = []
        for j in range(2 * r.multiplicity):
            d = sp.expand(sp.diff(rel, eq.v, j)) if j else rel
            conds.append(sp.expand(d.subs(eq.v, U[i])))
        groups.append(conds)
    equations = [e for g in groups for e in g]
    if len(roots) > 1:
        equations.append(_distinctness(U, witness))
    generic = all(r.multiplicity == 1 and not r.conjectured for r in roots)
    sys = StrategySystem(eq, equations, witness, N, groups=groups,
                         roots=roots, U=U, sol=sol, kind="2k",
                         generic=generic, trace=trace)
    sys.delta = Delta
    sys.relevant = relevant
    sys.residual_orders()
    return sys


def build_k_determinants(P, Q, var, k):
    """The truncated-Sylvester conditions: when P and Q share k roots in var,
    all k determinants vanish.  Returned largest-to-smallest overlap:
    index i deletes the last 2i columns."""
    Pe = P.as_expr() if isinstance(P, MPoly) else sp.sympify(P)
    Qe = Q.as_expr() if isinstance(Q, MPoly) else sp.sympify(Q)
    m, n = sp.degree(Pe, var), sp.degree(Qe, var)
    if k > min(m, n):
        raise ValueError(f"k={k} exceeds a degree in {var} ({m},{n})")
    out = []
    for i in range(k):
        M = sk_matrix(Pe, Qe, var, i)
        d = sp.expand(M.det())
        syms = tuple(sorted(d.free_symbols, key=str))
        out.append(MPoly.from_expr(d, syms if syms else (sp.Symbol("t"),)))
    return out


def kernel_method(eq, N):
    """Linear shortcut: with K(t,u) F(u) = -C(F_1,...,F_k,t,u), each kernel
    root finite at t=0 kills the right side.  The returned system carries
    the per-root relations and, in .relations, the root-free determinant
    consequences among the F_i."""
    if eq.x0_degree != 1:
        raise StrategyError(
            "kernel method needs an equation linear in the main unknown")
    P = eq.poly_expr()
    K = sp.expand(sp.diff(P, eq.x[0]))
    if any(K.has(x) for x in eq.x):
        raise StrategyError("kernel coefficient involves the unknowns")
    C = sp.expand(P - K * eq.x[0])
    sol = solve_series(eq, N)
    PhiK = compose_series(K, {}, N, t=eq.t, v=eq.v)
    p = PhiK.t_valuation()
    if p is None:
        raise StrategyError("kernel vanishes identically")
    if p:
        PhiK = PhiK.t_shift(-p)
    n = count_finite_roots(PhiK)
    if n == 0:
        raise StrategyError("kernel has no roots finite at t=0")
    k = eq.k
    if n != k:
        raise NonGenericError(
            f"kernel has {n} finite roots for {k} unknowns: "
            "non-generic; use multiplicity-aware path")
    bundle = expand_roots(PhiK, N)
    roots = _sorted_roots(bundle)
    if any(r.multiplicity != 1 or r.conjectured for r in roots):
        raise NonGenericError("kernel root collision: non-generic")
    U, _ = _root_symbols(k)
    witness = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, k + 1)}
    groups = []
    for i, r in enumerate(roots):
        witness[U[i]] = r.series
        groups.append([sp.expand(K.subs(eq.v, U[i])),
                       sp.expand(C.subs(eq.v, U[i]))])
    equations = [e for g in groups for e in g]
    if k > 1:
        equations.append(_distinctness(U, witness))
    trace = []
    ctx = _ElimCtx(eq, witness, N, trace)
    relations = []
    for mp in build_k_determinants(K, C, eq.v, k):
        relations.append(ctx.vanishing_part(
            mp.as_expr(), note="determinant condition"))
    sys = StrategySystem(eq, equations, witness, N, groups=groups,
                         roots=roots, U=U, relations=relations, sol=sol,
                         kind="kernel", trace=trace)
    sys.kernel = K
    sys.residual_orders()
    return sys


def quadratic_method(eq, N):
    """Quadratic shortcut for one unknown: the discriminant in the main
    unknown has a double root, so its own v-discriminant vanishes."""
    if eq.x0_degree != 2 or eq.k != 1:
        raise StrategyError(
            "quadratic shortcut needs degree 2 and a single unknown")
    sol = solve_series(eq, N)
    Delta = discriminant(eq.poly_expr(), eq.x[0])
    dd = discriminant(Delta, eq.v)
    target = eq.x[1]
    witness = {target: sol.unknowns[0]}
    trace = [{"op": "discriminant of discriminant", "result": dd}]
    ctx = _ElimCtx(eq, witness, N, trace)
    return _certify(dd, target, eq, sol.unknowns[0], ctx, target_index=1)


# ---------------------------------------------------------------------------
# elimination driver
# ---------------------------------------------------------------------------

def _target_symbol(eq, target):
    if isinstance(target, int):
        return eq.x[target], target
    for i in range(1, eq.k + 1):
        if eq.x[i] == target or str(eq.x[i]) == str(target):
            return eq.x[i], i
    raise ValueError(f"unknown target {target!r}")


def eliminate(sys, target, plan=None):
    """Project the system onto the target unknown and certify the result."""
    eq = sys.eq
    target, tindex = _target_symbol(eq, target)
    ctx = _ElimCtx(eq, sys.witness, sys.order, list(sys.trace))
    Fs = list(eq.x[1:])
    if sys.relations is not None:
        state = _sequential_eliminate(
            sys.relations,
            plan or [f for f in reversed(Fs) if f != target], ctx)
        final = _final_relation(state, target, eq)
        return _certify(final, target, eq, sys.witness[target], ctx,
                        target_index=tindex)
    # reduce each per-root group to a pair, eliminating evaluation symbols
    groups = []
    for i, g in enumerate(sys.groups):
        w = sys.W[i] if i < len(sys.W) else None
        if w is not None and any(e.has(w) for e in g):
            have = [e for e in g if e.has(w)]
            rest = [e for e in g if not e.has(w)]
            if len(have) == 1:
                raise StrategyError(
                    f"cannot eliminate {w}: only one relation mentions it")
            new = [ctx.res(a, b, w, note=f"root {i + 1}: eliminate {w}")
                   for a, b in zip(have, have[1:])]
            g = rest + new
        groups.append(list(g))
    if plan is not None:
        state = _sequential_eliminate([e for g in groups for e in g]
                                      + _extra(sys), plan, ctx)
        final = _final_relation(state, target, eq)
        return _certify(final, target, eq, sys.witness[target], ctx,
                        target_index=tindex)
    k = eq.k
    if k == 1:
        (g,) = groups
        while len(g) > 2:
            g = g[:-2] + [ctx.res(g[-2], g[-1], sys.U[0],
                                  note=f"reduce in {sys.U[0]}")]
        final = ctx.res(g[0], g[1], sys.U[0], note=f"eliminate {sys.U[0]}")
        return _certify(final, target, eq, sys.witness[target], ctx,
                        target_index=tindex)
    paired = (k == 2 and len(groups) == 2
              and all(len(g) == 2 for g in groups)
              and all(all(e.has(*Fs) and all(e.has(f) for f in Fs) for e in g)
                      for g in groups))
    if paired:
        final, keep, root_rel = _paired_eliminate(groups, Fs, sys.U,
                                                  target, ctx)
        cert = _certify(final, target, eq, sys.witness[target], ctx,
                        target_index=tindex)
        cert.per_root_relation = keep
        cert.root_relation = root_rel
        return cert
    default = ([f for f in reversed(Fs) if f != target]
               + list(reversed(sys.U)))
    state = _sequential_eliminate([e for g in groups for e in g], default, ctx)
    final = _final_relation(state, target, eq)
    return _certify(final, target, eq, sys.witness[target], ctx,
                    target_index=tindex)


def _extra(sys):
    flat = {id(e) for g in sys.groups for e in g}
    return [e for e in sys.equations if id(e) not in flat and not e.has(_X)]


def _final_relation(state, target, eq):
    good = [e for e in state
            if e.has(target) and not (e.free_symbols - {target, eq.t}
                                      - set(eq.weights))]
    if not good:
        raise StrategyError(
            f"elimination finished without a relation in {target} alone")
    return good[0] if len(good) == 1 else sp.gcd(good[0], good[1])


def determinant_route(sys, target):
    """Certify via the truncated-Sylvester conditions: split the relevant
    discriminant factor along each unknown (keeping v), observe that the two
    split polynomials share all k roots U_i, and take the k determinant
    conditions instead of cross-root resultants."""
    eq = sys.eq
    target, tindex = _target_symbol(eq, target)
    if sys.kind != "2k" or not sys.relevant:
        raise StrategyError("determinant route needs a discriminant system")
    k = len(sys.roots)
    Fs = list(eq.x[1:])
    Rel = sys.relevant[0]
    Relv = sp.expand(sp.diff(Rel, eq.v))
    trace = list(sys.trace)

    class _AllRootsCtx(_ElimCtx):
        def residual(self, expr):
            worst = None
            for r in sys.roots:
                local = dict(self.witness)
                local[eq.v] = r.series
                out = compose_series(expr, local, self.order,
                                     t=eq.t, v=eq.v)
                if not out.is_zero_mod_order():
                    return out
                if worst is None or out.order < worst.order:
                    worst = out
            return worst

    rctx = _AllRootsCtx(eq, sys.witness, sys.order, trace)
    split = {}
    for f in Fs:
        split[f] = rctx.res(Rel, Relv, f, note=f"split along {f}")
    others = [f for f in Fs if f != target]
    P1 = split[others[0]] if others else split[target]
    P2 = split[target] if others else Relv
    if sp.degree(P1, eq.v) > sp.degree(P2, eq.v):
        P1, P2 = P2, P1
    ctx = _ElimCtx(eq, sys.witness, sys.order, trace)
    rels = []
    dets = []
    for mp in build_k_determinants(P1, P2, eq.v, k):
        dets.append(mp.as_expr())
        rels.append(ctx.vanishing_part(mp.as_expr(),
                                       note="determinant condition"))
    state = _sequential_eliminate(rels, [f for f in reversed(others)], ctx)
    final = _final_relation(state, target, eq)
    cert = _certify(final, target, eq, sys.witness[target], ctx,
                    target_index=tindex)
    cert.determinants = dets
    return cert


# ---------------------------------------------------------------------------
# multiple-root path
# ---------------------------------------------------------------------------

class MultiplicityReport:
    """Outcome of the multiple-root pipeline: closed forms for the unknowns,
    the specialized equation, and the verification order."""

    def __init__(self, root_candidates, certificates, assignments,
                 specialized, verified_order, trace):
        self.root_candidates = root_candidates   # list of MPoly in (t, v)
        self.certificates = certificates
        self.assignments = assignments            # symbol -> closed form in t
        self.specialized = specialized            # MPoly in (x0, t, v)
        self.verified_order = verified_order
        self.trace = trace


def _root_closed_form(series, eq):
    """Guess a minimal polynomial for a root series; insist on degree 1 in v
    so the root can be substituted as a closed form."""
    coeffs = _rational_coeffs(series)
    if coeffs is None:
        raise StrategyError("root series has non-rational coefficients")
    for d_t in range(1, 4):
        try:
            A = algebraic_approximant(coeffs, (d_t, 1), eq.t, eq.v)
        except ValueError:
            break
        if A is not None:
            return A
    raise OrderTooLowError("no degree-1 closed form found for the multiple "
                           "root at this order; raise the order")


def multiplicity_path(eq, N):
    """Handle a conjectured multiple root: guess its closed form, impose the
    2l vanishing conditions on the discriminant's relevant factor, solve for
    the unknowns, and verify the specialized equation against the series."""
    sol = solve_series(eq, N)
    P = eq.poly_expr()
    Phi = _composed_x0_derivative(eq, sol, N)
    bundle = expand_roots(Phi, N)
    roots = _sorted_roots(bundle)
    mult_roots = [r for r in roots if r.multiplicity > 1]
    if not mult_roots:
        raise StrategyError("all roots are simple: use the generic pipelines")
    Delta = discriminant(P, eq.x[0])
    k = eq.k
    trace = []
    witness = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, k + 1)}
    conds = []
    root_candidates = []
    for r in mult_roots:
        A = _root_closed_form(r.series, eq)
        root_candidates.append(A)
        Uc = sp.solve(A.as_expr(), eq.v)[0]
        local = dict(witness)
        local[eq.v] = r.series
        floor = max(4, min(int(r.series.order) - 1, N // 4))
        ctx = _ElimCtx(eq, local, N, trace, floor=floor)
        rel = ctx.vanishing_part(Delta, note="discriminant factors at the "
                                             "multiple root")
        for j in range(2 * r.multiplicity):
            d = sp.expand(sp.diff(rel, eq.v, j)) if j else rel
            c = sp.expand(d.subs(eq.v, Uc))
            if c != 0:
                conds.append(c)
        trace.append({"op": "conditions", "root": A.text(),
                      "count": 2 * r.multiplicity})
    # solve the unknowns one closed form at a time
    assignments = {}
    certificates = []
    remaining = list(conds)
    unknowns = list(eq.x[1:])
    ctx = _ElimCtx(eq, witness, N, trace)
    for step in range(k):
        left = [x for x in unknowns if x not in assignments]
        target = left[0]
        others = [x for x in left[1:]]
        E = None
        if not others:
            E = next((c for c in remaining if sp.expand(c) != 0
                      and c.has(target)), None)
        elif len(others) == 1:
            s = others[0]
            for a, b in itertools.combinations(
                    [c for c in remaining if c.has(s)], 2):
                r = sp.expand(resultant(a, b, s))
                if r != 0 and r.has(target):
                    E = r
                    break
        else:
            raise StrategyError("closed-form solving implemented for at most "
                                "two unknowns")
        if E is None:
            raise StrategyError(f"no usable condition for {target}")
        cert = _certify(E, target, eq, witness[target], ctx,
                        target_index=unknowns.index(target) + 1)
        certificates.append(cert)
        ce = cert.candidate_expr()
        if sp.degree(ce, target) != 1:
            raise StrategyError(
                f"candidate for {target} is not degree 1; cannot substitute")
        closed = sp.solve(ce, target)[0]
        assignments[target] = closed
        remaining = [sp.expand(sp.cancel(c.subs(target, closed)))
                     for c in remaining]
        remaining = [sp.fraction(sp.together(c))[0] for c in remaining
                     if c != 0]
    spec = sp.expand(P.subs(assignments))
    spec = content_normalize(spec, (eq.x[0], eq.t, eq.v))
    Nver = max(20, N)
    solv = solve_series(eq, Nver)
    resid = compose_series(spec, {eq.x[0]: solv.F}, Nver, t=eq.t, v=eq.v)
    if not resid.is_zero_mod_order():
        raise VerificationError(
            f"conjecture refuted at order t^{resid.t_valuation()}")
    trace.append({"op": "verify", "order": Nver, "result": "specialized "
                  "equation annihilates the series"})
    return MultiplicityReport(root_candidates, certificates, assignments,
                              MPoly.from_expr(spec, (eq.x[0], eq.t, eq.v)),
                              Nver, trace)


# ---------------------------------------------------------------------------
# discriminant factorization ansatz
# ---------------------------------------------------------------------------

class AnsatzShape:
    """Skeleton for the discriminant ansatz: constant, t-power, zero-root
    degree, degree at infinity, and (base polynomial, multiplicity) clusters
    of finite roots, all read off the numeric canonical factorization."""

    def __init__(self, c, p, d_zero, d_inf, clusters):
        self.c = c
        self.p = p
        self.d_zero = d_zero
        self.d_inf = d_inf
        self.clusters = list(clusters)   # (base t=0 poly in v, degree, mult)


def _derive_shape(Rser, Rel, eq, N):
    fac = canonical_factorization(Rser, N)
    n = sp.degree(Rel, eq.v)
    d_zero = 0
    z0 = fac.zero_factor.slice_expr(Fraction(0), eq.v)
    d_zero = sp.degree(z0, eq.v) if z0 != 0 else 0
    clusters = []
    used = d_zero
    for f in fac.finite_factors:
        s0 = sp.factor(f.slice_expr(Fraction(0), eq.v))
        _, parts = sp.factor_list(s0, eq.v)
        mult = sp.gcd([sp.Integer(e) for _, e in parts]) if parts else 1
        mult = int(mult)
        # The t=0 slice being a perfect power is necessary but not
        # sufficient (conjugate Puiseux roots square the slice without
        # squaring the factor): keep the largest power of two the series
        # factor supports as an exact root.
        mult = 1 << (mult.bit_length() - 1)
        while mult > 1:
            try:
                root = f
                for _ in range(mult.bit_length() - 1):
                    root = root.sqrt()
                break
            except ValueError:
                mult >>= 1
        base0 = sp.expand(sp.prod([b ** (e // mult) for b, e in parts]))
        deg = sp.degree(base0, eq.v)
        clusters.append((base0, deg, mult))
        used += mult * deg
    d_inf = n - used
    return AnsatzShape(fac.c, fac.p, d_zero, d_inf, clusters), fac


def _shape_witness(fac, shape, eq, N):
    """Series values for the ansatz unknowns, from the numeric factorization."""
    wit = {}
    unit = fac.unit  # 1 + t S
    S = (unit - PuiseuxSeries.const(1, unit.order)).t_shift(-1)
    wit["S"] = S
    for i in range(1, shape.d_inf + 1):
        wit[f"R{i}"] = fac.infinity_factor.u_coeff_series(i).t_shift(-1)
    for ci, (base0, deg, mult) in enumerate(shape.clusters):
        f = fac.finite_factors[ci]
        root = f
        for _ in range(mult.bit_length() - 1):
            root = root.sqrt()
        if 2 ** (mult.bit_length() - 1) != mult:
            raise StrategyError("cluster multiplicity is not a power of two; "
                                "supply the shape explicitly")
        for j in range(1, deg + 1):
            c0 = sp.Poly(base0, eq.v).coeff_monomial(eq.v ** j) or 0
            wit[f"q{ci}_{j}"] = (root.u_coeff_series(j)
                                 - PuiseuxSeries.const(c0, root.order)
                                 ).t_shift(-1)
    return wit


def factorization_ansatz(eq, shape=None, N=24, target=None):
    """Match the discriminant's relevant factor against its canonical shape
    with undetermined series, then eliminate down to the target unknown."""
    sol = solve_series(eq, N)
    P = eq.poly_expr()
    Delta = discriminant(P, eq.x[0])
    witness = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, eq.k + 1)}
    target = target if target is not None else eq.x[1]
    target, tindex = _target_symbol(eq, target)
    # relevant factor: keep components vanishing at some root
    Phi = _composed_x0_derivative(eq, sol, N)
    bundle = expand_roots(Phi, N)
    trace = []
    kept = None
    for r in _sorted_roots(bundle):
        local = dict(witness)
        local[eq.v] = r.series
        ctx = _ElimCtx(eq, local, N, trace,
                       floor=max(4, min(N // 4, int(r.series.order) - 2)))
        part = ctx.vanishing_part(Delta, note="relevant discriminant factor")
        kept = part if kept is None else sp.lcm(kept, part)
    Rel = sp.expand(kept)
    subs = {eq.x[i]: sol.unknowns[i - 1] for i in range(1, eq.k + 1)}
    Rser = compose_series(Rel, subs, N, t=eq.t, v=eq.v)
    derived, fac = _derive_shape(Rser, Rel, eq, N)
    if shape is not None:
        if (shape.d_zero, shape.d_inf,
                [(d, m) for _, d, m in shape.clusters]) != \
           (derived.d_zero, derived.d_inf,
                [(d, m) for _, d, m in derived.clusters]):
            raise StrategyError("shape inconsistent with root classification")
    shape = derived
    # symbolic ansatz
    t, v = eq.t, eq.v
    syms = {"S": sp.Symbol("S")}
    ansatz = sp.sympify(shape.c) * t ** shape.p * (1 + t * syms["S"])
    inf_part = sp.Integer(1)
    for i in range(1, shape.d_inf + 1):
        syms[f"R{i}"] = sp.Symbol(f"R{i}")
        inf_part += t * syms[f"R{i}"] * v ** i
    ansatz *= inf_part
    if shape.d_zero:
        zc = [sp.Symbol(f"z{j}") for j in range(shape.d_zero)]
        for j, s in enumerate(zc):
            syms[f"z{j}"] = s
        ansatz *= (v ** shape.d_zero
                   + t * sum(s * v ** j for j, s in enumerate(zc)))
    for ci, (base0, deg, mult) in enumerate(shape.clusters):
        corr = sp.Integer(0)
        for j in range(1, deg + 1):
            syms[f"q{ci}_{j}"] = sp.Symbol(f"q{ci}_{j}")
            corr += t * syms[f"q{ci}_{j}"] * v ** j
        ansatz *= (base0 + corr) ** mult
    diff = sp.expand(Rel - sp.expand(ansatz))
    eqs = [sp.expand(c) for c in sp.Poly(diff, v).all_coeffs()[::-1]]
    eqs = [c for c in eqs if c != 0]
    # adjoin the ansatz-unknown witnesses (named by the same symbols)
    shape_wit = _shape_witness(fac, shape, eq, N)
    for name, ser in shape_wit.items():
        witness[syms[name]] = ser
    ctx = _ElimCtx(eq, witness, N, trace)
    # triangular pass: solve any equation linear in a single ansatz unknown
    unknown_syms = [s for n, s in syms.items()]
    solved = {}
    changed = True
    while changed:
        changed = False
        rest = []
        for c in eqs:
            c = sp.expand(sp.fraction(sp.together(sp.cancel(c)))[0])
            if c == 0:
                continue
            present = [s for s in unknown_syms
                       if s not in solved and c.has(s)]
            if len(present) == 1 and sp.degree(c, present[0]) == 1:
                s = present[0]
                val = sp.solve(c, s)[0]
                solved[s] = val
                eqs = [sp.expand(sp.cancel(e.subs(s, val))) for e in rest] + \
                      [sp.expand(sp.cancel(e.subs(s, val)))
                       for e in eqs[eqs.index(c) + 1:]]
                trace.append({"op": "ansatz solve", "symbol": str(s)})
                changed = True
                break
            rest.append(c)
        else:
            eqs = rest
    eqs = [sp.expand(sp.fraction(sp.together(sp.cancel(c)))[0])
           for c in eqs]
    eqs = [c for c in eqs if c != 0]
    # eliminate the leftover ansatz unknowns, then the non-target F's
    leftover = [s for s in unknown_syms if s not in solved
                and any(c.has(s) for c in eqs)]
    plan = leftover + [x for x in reversed(eq.x[1:]) if x != target]
    state = _sequential_eliminate(eqs, plan, ctx)
    final = _final_relation(state, target, eq)
    cert = _certify(final, target, eq, witness[target], ctx,
                    target_index=tindex)
    cert.shape = shape
    return cert
