"""Catalytic functional equations: DSL parsing, bindings, and series solving.

An equation is a polynomial relation P(F(u), F_1, ..., F_k, t, u) = 0 where
each unknown univariate series F_i is bound to F by a binding (coefficient
of a u-power, value at a point, or derivative at a point).  The DSL writes
the equation in solved form `F = <expr>`; clearing denominators produces the
polynomial P, and the solved form is iterated layer by layer in t to compute
the truncated solution.
"""

from __future__ import annotations

import re
from fractions import Fraction

import sympy as sp

from .algebra import MPoly
from .scalars import as_sympy, normalize_scalar, scalar_is_zero, to_scalar
from .series import INF, BivariateSeries, PuiseuxSeries, _sadd, _smul, _ssub


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        loc = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(msg + loc)
        self.line, self.col = line, col


class SolveError(ValueError):
    """A t-layer failed to solve (non-well-founded equation)."""

    def __init__(self, msg, order=None):
        super().__init__(msg)
        self.order = order


# ---------------------------------------------------------------------------
# bindings
# ---------------------------------------------------------------------------

class UnknownBinding:
    """Ties the unknown x_index to the catalytic series F.

    kind: "coeff" (CoeffAtU j), "value" (ValueAt a), "deriv"
    (DerivativeAt a, order r, with an optional rational scale, e.g. 1/i! for
    constellation unknowns), "divdiff" (alias: the coefficient entering the
    i-th divided difference, same data as coeff i-1), or "aux" (supplied by
    an external witness provider, used by the pre-eliminated hard-particle
    equation).
    """

    __slots__ = ("kind", "index", "j", "a", "r", "scale", "provider")

    def __init__(self, kind, index, *, j=None, a=None, r=None, scale=None,
                 provider=None):
        self.kind = kind
        self.index = index
        self.j = j
        self.a = Fraction(a) if a is not None else None
        self.r = r
        self.scale = Fraction(scale) if scale is not None else Fraction(1)
        self.provider = provider
        if kind == "divdiff":
            self.kind = "coeff"
            self.j = j if j is not None else 0

    def apply(self, F: BivariateSeries) -> PuiseuxSeries:
        if self.kind == "coeff":
            return F.u_coeff_series(self.j)
        if self.kind == "value":
            return F.eval_u(self.a)
        if self.kind == "deriv":
            G = F
            for _ in range(self.r):
                G = G.u_derivative()
            return G.eval_u(self.a) * self.scale
        if self.kind == "aux":
            raise SolveError("auxiliary binding needs an external witness")
        raise ValueError(f"unknown binding kind {self.kind}")

    def label(self):
        if self.kind == "coeff":
            return f"coeff(F,u,{self.j})"
        if self.kind == "value":
            return f"F({self.a})"
        if self.kind == "deriv":
            primes = "'" * self.r
            pre = "" if self.scale == 1 else f"({self.scale})*"
            return f"{pre}F{primes}({self.a})"
        return f"aux:{self.index}"

    def __repr__(self):
        return f"UnknownBinding[{self.label()} -> x{self.index}]"


# ---------------------------------------------------------------------------
# the equation object
# ---------------------------------------------------------------------------

class CatalyticEquation:
    """Cleared polynomial + bindings + the solved form used for iteration."""

    def __init__(self, poly, bindings, rhs_ast=None, weights=(), name=None,
                 normal_form=None, aux_solver=None):
        self.k = len(bindings)
        self.x = sp.symbols(f"x0:{self.k + 1}")
        self.t = sp.Symbol("t")
        self.v = sp.Symbol("v")
        self.weights = tuple(sp.Symbol(w) if isinstance(w, str) else w
                             for w in weights)
        self.bindings = list(bindings)
        self.rhs_ast = rhs_ast
        self.name = name
        self.normal_form = normal_form
        self.aux_solver = aux_solver
        variables = (self.x[0],) + tuple(self.x[1:]) + (self.t, self.v) + self.weights
        if isinstance(poly, MPoly):
            poly = poly.as_expr()
        self.poly = MPoly.from_expr(sp.expand(poly), variables)

    @property
    def x0_degree(self):
        return self.poly.degree(self.x[0])

    def poly_expr(self):
        return self.poly.as_expr()

    def __repr__(self):
        nm = self.name or "equation"
        return f"CatalyticEquation({nm}, k={self.k}, deg_x0={self.x0_degree})"


class SeriesSolution:
    """Truncated F(t,u) plus the bound unknown series, residual-checked."""

    def __init__(self, eq, F, unknowns, order):
        self.eq = eq
        self.F = F
        self.unknowns = list(unknowns)
        self.order = order

    def unknown(self, i):
        """x_i as a PuiseuxSeries (1-based, matching x1..xk)."""
        return self.unknowns[i - 1]

    def residual(self):
        subs = {self.eq.x[0]: self.F}
        for i, s in enumerate(self.unknowns, start=1):
            subs[self.eq.x[i]] = s
        return compose_series(self.eq.poly_expr(), subs, self.order,
                              t=self.eq.t, v=self.eq.v)


# ---------------------------------------------------------------------------
# composition of a polynomial with series values
# ---------------------------------------------------------------------------

def compose_series(expr, subs, order, *, t=None, v=None):
    """Evaluate a polynomial at series arguments, as a BivariateSeries.

    subs maps sympy symbols to BivariateSeries / PuiseuxSeries / scalars.
    The symbols t and v (when given) are mapped to the series t and the
    catalytic variable u automatically.  Unmapped symbols stay symbolic
    inside the scalar coefficients.
    """
    expr = sp.expand(sp.sympify(expr))
    t = t if t is not None else sp.Symbol("t")
    v = v if v is not None else sp.Symbol("v")
    full = dict(subs)
    full.setdefault(t, BivariateSeries.monomial(1, 1, 0, order=INF))
    full.setdefault(v, BivariateSeries.monomial(1, 0, 1, order=INF))
    gens = [g for g in full if expr.has(g)]
    if not gens:
        return BivariateSeries.const(expr, order=order)
    poly = sp.Poly(expr, *gens)
    # precompute powers
    powcache = {}

    def power(g, e):
        key = (g, e)
        if key not in powcache:
            base = full[g]
            if not isinstance(base, (BivariateSeries, PuiseuxSeries)):
                powcache[key] = as_sympy(base) ** e
            elif isinstance(base, PuiseuxSeries):
                powcache[key] = base ** e
            else:
                powcache[key] = base ** e
        return powcache[key]

    acc = BivariateSeries.zero(order)
    for mono, coeff in zip(poly.monoms(), poly.coeffs()):
        term = BivariateSeries.const(coeff, order=INF)
        for g, e in zip(gens, mono):
            if e == 0:
                continue
            p = power(g, e)
            if isinstance(p, (BivariateSeries, PuiseuxSeries)):
                term = term * p
            else:
                term = term * p
        acc = acc + term.truncate(order)
    return acc.truncate(order)


def divided_difference(F: BivariateSeries, i: int) -> BivariateSeries:
    """Delta^(i) F = (F - F_1 - u F_2 - ... - u^{i-1} F_i) / u^i."""
    if i < 1:
        raise ValueError("divided difference order must be >= 1")
    out = {}
    for e, sl in F.coeffs.items():
        dst = {j - i: c for j, c in sl.items() if j >= i}
        if dst:
            out[e] = dst
    return BivariateSeries(out, F.order, laurent=F.laurent, normalize=False)


# ---------------------------------------------------------------------------
# DSL parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*'*)|(\^|\*|/|\+|-|\(|\)|,|=))")


def _tokenize(text, lineno):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"bad character {text[pos]!r}", lineno, pos + 1)
        if m.group(1):
            out.append(("num", int(m.group(1)), pos))
        elif m.group(2):
            out.append(("name", m.group(2), pos))
        else:
            out.append(("op", m.group(3), pos))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _ExprParser:
    """Recursive-descent parser for the equation DSL expressions."""

    def __init__(self, tokens, lineno, uvar="u"):
        self.toks = tokens
        self.i = 0
        self.lineno = lineno
        self.uvar = uvar

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val!r}", self.lineno, pos + 1)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {val!r}", self.lineno, pos + 1)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                node = ("add", node, rhs) if val == "+" else ("sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.unary()
                node = ("mul", node, rhs) if val == "*" else ("div", node, rhs)
            else:
                return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return ("neg", self.unary())
        if kind == "op" and val == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            nkind, nval, pos = self.next()
            neg = False
            if nkind == "op" and nval == "-":
                neg = True
                nkind, nval, pos = self.next()
            if nkind != "num":
                raise ParseError("exponent must be an integer", self.lineno, pos + 1)
            e = -nval if neg else nval
            return ("powi", base, e)
        return base

    def atom(self):
        kind, val, pos = self.next()
        if kind == "num":
            return ("num", Fraction(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            primes = len(val) - len(val.rstrip("'"))
            bare = val.rstrip("'")
            if bare == "F":
                nkind, nval, _ = self.peek()
                if nkind == "op" and nval == "(":
                    self.next()
                    a = self.rational()
                    self.expect(")")
                    if primes:
                        return ("Fder", a, primes)
                    return ("Fval", a)
                if primes:
                    raise ParseError("derivative needs an evaluation point",
                                     self.lineno, pos + 1)
                return ("F",)
            if bare == "coeff":
                self.expect("(")
                nkind, nval, npos = self.next()
                if (nkind, nval) != ("name", "F"):
                    raise ParseError("coeff(F,u,j) expected", self.lineno, npos + 1)
                self.expect(",")
                nkind, nval, npos = self.next()
                if (nkind, nval) != ("name", self.uvar):
                    raise ParseError(f"coeff(F,{self.uvar},j) expected",
                                     self.lineno, npos + 1)
                self.expect(",")
                nkind, nval, npos = self.next()
                if nkind != "num":
                    raise ParseError("integer u-exponent expected",
                                     self.lineno, npos + 1)
                self.expect(")")
                return ("coeff", nval)
            if primes:
                raise ParseError(f"cannot differentiate {bare!r}", self.lineno, pos + 1)
            return ("sym", bare)
        raise ParseError(f"unexpected token {val!r}", self.lineno, pos + 1)

    def rational(self):
        kind, val, pos = self.next()
        neg = False
        if kind == "op" and val == "-":
            neg = True
            kind, val, pos = self.next()
        if kind != "num":
            raise ParseError("rational expected", self.lineno, pos + 1)
        num = val
        nkind, nval, _ = self.peek()
        if nkind == "op" and nval == "/":
            self.next()
            dkind, dval, dpos = self.next()
            if dkind != "num":
                raise ParseError("rational expected", self.lineno, dpos + 1)
            q = Fraction(num, dval)
        else:
            q = Fraction(num)
        return -q if neg else q


def _split_toplevel(text):
    """Split on commas that are not inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        cur.append(ch)
    parts.append("".join(cur))
    return parts


_BINDING_RE = re.compile(
    r"^(?:F(?P<primes>'*)\((?P<at>-?\d+(?:/\d+)?)\)|coeff\(F,(?P<u>[A-Za-z_]\w*),(?P<j>\d+)\))$")


def parse_binding(text, index, uvar="u"):
    s = text.replace(" ", "")
    m = _BINDING_RE.match(s)
    if not m:
        raise ParseError(f"unrecognized unknown binding {text!r}")
    if m.group("j") is not None:
        if m.group("u") != uvar:
            raise ParseError(f"binding uses {m.group('u')!r}, catalytic variable is {uvar!r}")
        return UnknownBinding("coeff", index, j=int(m.group("j")))
    a = Fraction(m.group("at"))
    r = len(m.group("primes"))
    if r:
        return UnknownBinding("deriv", index, a=a, r=r)
    return UnknownBinding("value", index, a=a)


def parse_equation(text, name=None):
    """Parse a DSL source (one equation per file) into a CatalyticEquation."""
    tvar, uvar = "t", "u"
    unknown_texts = []
    weight_names = []
    lhs_ast = rhs_ast = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("expected 'key: value' line", lineno, 1)
        key, _, val = line.partition(":")
        key = key.strip()
        if key == "vars":
            parts = val.split()
            if len(parts) != 2:
                raise ParseError("vars needs exactly two names", lineno, 1)
            tvar, uvar = parts
        elif key == "unknowns":
            unknown_texts = [p.strip() for p in _split_toplevel(val) if p.strip()]
        elif key == "weights":
            weight_names = val.split()
        elif key == "equation":
            if "=" not in val:
                raise ParseError("equation needs '='", lineno, 1)
            l, _, r = val.partition("=")
            lhs_ast = _ExprParser(_tokenize(l, lineno), lineno, uvar).parse()
            rhs_ast = _ExprParser(_tokenize(r, lineno), lineno, uvar).parse()
        else:
            raise ParseError(f"unknown section {key!r}", lineno, 1)
    if rhs_ast is None:
        raise ParseError("no equation line found")
    bindings = [parse_binding(s, i + 1, uvar) for i, s in enumerate(unknown_texts)]
    return build_equation(lhs_ast, rhs_ast, bindings, weight_names,
                          tvar=tvar, uvar=uvar, name=name)


def _rename_vars(node, tvar, uvar):
    if node[0] == "sym":
        if node[1] == tvar:
            return ("sym", "t")
        if node[1] == uvar:
            return ("sym", "u")
        return node
    if node[0] in ("num", "F", "Fval", "Fder", "coeff"):
        return node
    if node[0] == "powi":
        return ("powi", _rename_vars(node[1], tvar, uvar), node[2])
    if node[0] == "neg":
        return ("neg", _rename_vars(node[1], tvar, uvar))
    return (node[0],) + tuple(_rename_vars(ch, tvar, uvar) for ch in node[1:])


def build_equation(lhs_ast, rhs_ast, bindings, weight_names, *, tvar="t",
                   uvar="u", name=None, aux_solver=None):
    if (tvar, uvar) != ("t", "u"):
        if "t" in (uvar,) or "u" in (tvar,):
            raise ParseError("variable names t and u cannot be swapped")
        lhs_ast = _rename_vars(lhs_ast, tvar, uvar)
        rhs_ast = _rename_vars(rhs_ast, tvar, uvar)
        tvar, uvar = "t", "u"
    solved_rhs = None
    if lhs_ast == ("F",):
        solved_rhs = rhs_ast
    elif rhs_ast == ("F",):
        solved_rhs = lhs_ast
    eq_sym = {}
    k = len(bindings)
    for w in weight_names:
        if re.fullmatch(r"x\d+", w) or w in ("t", "u", "v"):
            raise ParseError(f"weight name {w!r} collides with an internal "
                             "symbol; pick another name")
    xs = sp.symbols(f"x0:{k + 1}")
    t, v = sp.Symbol("t"), sp.Symbol("v")
    weights = tuple(sp.Symbol(w) for w in weight_names)
    wmap = {w.name: w for w in weights}

    def to_expr(node):
        op = node[0]
        if op == "num":
            return sp.Rational(node[1].numerator, node[1].denominator)
        if op == "sym":
            nm = node[1]
            if nm == tvar:
                return t
            if nm == uvar:
                return v
            if nm in wmap:
                return wmap[nm]
            raise ParseError(f"unbound symbol {nm!r} (declare it in weights:)")
        if op == "F":
            return xs[0]
        if op in ("Fval", "Fder", "coeff"):
            idx = _binding_index(bindings, node)
            if idx is None:
                raise ParseError(f"unbound unknown {node!r} (declare it in unknowns:)")
            return xs[idx]
        if op == "add":
            return to_expr(node[1]) + to_expr(node[2])
        if op == "sub":
            return to_expr(node[1]) - to_expr(node[2])
        if op == "mul":
            return to_expr(node[1]) * to_expr(node[2])
        if op == "div":
            return to_expr(node[1]) / to_expr(node[2])
        if op == "neg":
            return -to_expr(node[1])
        if op == "powi":
            return to_expr(node[1]) ** node[2]
        raise ParseError(f"bad AST node {node!r}")

    diff = to_expr(lhs_ast) - to_expr(rhs_ast)
    together = sp.together(sp.cancel(diff))
    numer, denom = sp.fraction(together)
    numer = sp.expand(numer)
    if numer.has(sp.Symbol(tvar)) and tvar != "t":
        raise ParseError("internal: t symbol mismatch")
    try:
        sp.Poly(numer, *(xs + (t, v) + weights))
    except sp.PolynomialError as exc:
        raise ParseError(f"non-polynomial after clearing: {exc}") from exc
    eq = CatalyticEquation(numer, bindings, rhs_ast=solved_rhs,
                           weights=weights, name=name, aux_solver=aux_solver)
    eq.cleared_denominator = sp.expand(denom)
    return eq


def _binding_index(bindings, node):
    for b in bindings:
        if node[0] == "Fval" and b.kind == "value" and b.a == node[1]:
            return b.index
        if node[0] == "Fder" and b.kind == "deriv" and b.a == node[1] and b.r == node[2]:
            return b.index
        if node[0] == "coeff" and b.kind == "coeff" and b.j == node[1]:
            return b.index
    return None


# ---------------------------------------------------------------------------
# layer-by-layer solving
# ---------------------------------------------------------------------------

def _slice_eq(a, b):
    keys = set(a) | set(b)
    for j in keys:
        if not scalar_is_zero(_ssub(a.get(j, Fraction(0)), b.get(j, Fraction(0)))):
            return False
    return True


def _slice_add(a, b):
    out = dict(a)
    for j, c in b.items():
        out[j] = _sadd(out[j], c) if j in out else c
    return out


def _slice_neg(a):
    return {j: -c for j, c in a.items()}


def _slice_mulpair(a, b):
    out = {}
    for j1, c1 in a.items():
        for j2, c2 in b.items():
            j = j1 + j2
            p = _smul(c1, c2)
            out[j] = _sadd(out[j], p) if j in out else p
    return out


def _slice_clean(a):
    out = {}
    for j, c in a.items():
        c = normalize_scalar(c)
        if not scalar_is_zero(c):
            out[j] = c
    return out


def _slice_exact_div(x, d, where):
    """Polynomial long division of slice x by slice d; error on remainder."""
    x = dict(x)
    if not d:
        raise SolveError(f"division by zero slice at {where}")
    dd = max(d)
    dlc = d[dd]
    q = {}
    while x:
        xd = max(x)
        xc = x.pop(xd)
        if scalar_is_zero(normalize_scalar(xc)):
            continue
        if xd < dd:
            raise SolveError(f"non-exact u-division at {where}")
        c = xc / dlc if isinstance(xc, Fraction) and isinstance(dlc, Fraction) else sp.cancel(as_sympy(xc) / as_sympy(dlc))
        j = xd - dd
        q[j] = _sadd(q[j], c) if j in q else c
        for jd, cd in d.items():
            if jd == dd:
                continue
            jj = j + jd
            p = _smul(c, cd)
            x[jj] = _ssub(x[jj], p) if jj in x else -p
        x = {k: vv for k, vv in x.items() if not scalar_is_zero(normalize_scalar(vv))}
    return q


class _LayerEvaluator:
    """Evaluates the solved-form AST one t-layer at a time with caching.

    F's slices live in self.F (list of {u_exp: scalar}); layers below
    self.frozen are final.  The current layer is recomputed on every inner
    iteration (token bump).
    """

    def __init__(self, ast, weights):
        self.ast = ast
        self.wmap = {w.name: w for w in weights}
        self.F = []
        self.frozen = 0
        self.token = 0
        self.cache = {}
        self.keep = []

    def bump(self):
        self.token += 1

    def layer(self, node, n, tvar, uvar):
        ent = self.cache.get(id(node))
        if ent is None:
            ent = {"slices": [], "tok": []}
            self.cache[id(node)] = ent
            self.keep.append(node)
        sl = ent["slices"]
        if n < len(sl) and (n < self.frozen or ent["tok"][n] == self.token):
            return sl[n]
        val = self._compute(node, n, tvar, uvar)
        while len(sl) <= n:
            sl.append({})
            ent["tok"].append(-1)
        sl[n] = val
        ent["tok"][n] = self.token
        return val

    def _compute(self, node, n, tvar, uvar):
        op = node[0]
        if op == "num":
            return {0: node[1]} if n == 0 else {}
        if op == "sym":
            nm = node[1]
            if nm == tvar:
                return {0: Fraction(1)} if n == 1 else {}
            if nm == uvar:
                return {1: Fraction(1)} if n == 0 else {}
            if nm in self.wmap:
                return {0: self.wmap[nm]} if n == 0 else {}
            raise SolveError(f"unbound symbol {nm}")
        if op == "F":
            return dict(self.F[n]) if n < len(self.F) else {}
        if op == "Fval":
            a = node[1]
            fl = self.F[n] if n < len(self.F) else {}
            s = Fraction(0)
            for j, c in fl.items():
                s = _sadd(s, _smul(c, Fraction(a) ** j))
            return {} if scalar_is_zero(s) else {0: s}
        if op == "Fder":
            a, r = node[1], node[2]
            fl = self.F[n] if n < len(self.F) else {}
            s = Fraction(0)
            for j, c in fl.items():
                if j < r:
                    continue
                fall = Fraction(1)
                for q in range(r):
                    fall *= j - q
                s = _sadd(s, _smul(_smul(c, fall), Fraction(a) ** (j - r)))
            return {} if scalar_is_zero(s) else {0: s}
        if op == "coeff":
            j = node[1]
            fl = self.F[n] if n < len(self.F) else {}
            return {0: fl[j]} if j in fl else {}
        if op == "neg":
            return _slice_neg(self.layer(node[1], n, tvar, uvar))
        if op == "add":
            return _slice_add(self.layer(node[1], n, tvar, uvar),
                              self.layer(node[2], n, tvar, uvar))
        if op == "sub":
            return _slice_add(self.layer(node[1], n, tvar, uvar),
                              _slice_neg(self.layer(node[2], n, tvar, uvar)))
        if op == "mul":
            out = {}
            for m in range(n + 1):
                a = self.layer(node[1], m, tvar, uvar)
                if not a:
                    continue
                b = self.layer(node[2], n - m, tvar, uvar)
                if not b:
                    continue
                out = _slice_add(out, _slice_mulpair(a, b))
            return _slice_clean(out)
        if op == "powi":
            e = node[2]
            if e < 0:
                raise SolveError("negative powers: rewrite with division")
            if e == 0:
                return {0: Fraction(1)} if n == 0 else {}
            # binary split keeps subterm caching effective
            if e == 1:
                return self.layer(node[1], n, tvar, uvar)
            half = ("powi", node[1], e // 2)
            rest = ("powi", node[1], e - e // 2)
            key = ("_powsplit", id(node))
            split = self.cache.get(key)
            if split is None:
                split = ("mul", half, rest)
                self.cache[key] = split
                self.keep.append(split)
            return self.layer(split, n, tvar, uvar)
        if op == "div":
            # q_n = (x_n - sum_{m=1..n} d_m q_{n-m}) / d_0, exact in u
            d0 = self.layer(node[2], 0, tvar, uvar)
            acc = dict(self.layer(node[1], n, tvar, uvar))
            ent = self.cache.get(id(node))
            for m in range(1, n + 1):
                dm = self.layer(node[2], m, tvar, uvar)
                if not dm:
                    continue
                qprev = ent["slices"][n - m] if ent and n - m < len(ent["slices"]) else None
                if qprev is None:
                    qprev = self.layer(node, n - m, tvar, uvar)
                    ent = self.cache.get(id(node))
                if not qprev:
                    continue
                acc = _slice_add(acc, _slice_neg(_slice_mulpair(dm, qprev)))
            acc = _slice_clean(acc)
            if not acc:
                return {}
            return _slice_clean(_slice_exact_div(acc, _slice_clean(d0), f"t^{n}"))
        raise SolveError(f"bad AST node {node!r}")


_ONE = ("num", Fraction(1))


def _rationalize(node):
    """Rewrite the AST as a single fraction (num, den), pushing '/' up.

    Divisions evaluated in isolation (like t/u) need not be exact layer by
    layer even when the full expression is; combining them into one
    top-level quotient keeps the layer recurrence well defined.
    """
    op = node[0]
    if op in ("num", "sym", "F", "Fval", "Fder", "coeff"):
        return node, _ONE
    if op == "neg":
        n, d = _rationalize(node[1])
        return ("neg", n), d
    if op == "powi":
        n, d = _rationalize(node[1])
        e = node[2]
        if e < 0:
            n, d, e = d, n, -e
        n = n if e == 1 else ("powi", n, e)
        d = d if e == 1 or d == _ONE else ("powi", d, e)
        return n, d
    if op == "mul":
        n1, d1 = _rationalize(node[1])
        n2, d2 = _rationalize(node[2])
        num = ("mul", n1, n2)
        if d1 == _ONE:
            return num, d2
        if d2 == _ONE:
            return num, d1
        return num, ("mul", d1, d2)
    if op == "div":
        n1, d1 = _rationalize(node[1])
        n2, d2 = _rationalize(node[2])
        num = n1 if d2 == _ONE else ("mul", n1, d2)
        den = n2 if d1 == _ONE else ("mul", d1, n2)
        return num, den
    if op in ("add", "sub"):
        n1, d1 = _rationalize(node[1])
        n2, d2 = _rationalize(node[2])
        if d1 == d2:
            return (op, n1, n2), d1
        if d1 == _ONE:
            return (op, ("mul", n1, d2), n2), d2
        if d2 == _ONE:
            return (op, n1, ("mul", n2, d1)), d1
        return (op, ("mul", n1, d2), ("mul", n2, d1)), ("mul", d1, d2)
    raise SolveError(f"bad AST node {node!r}")


def solve_series(eq: CatalyticEquation, N: int) -> SeriesSolution:
    """Layer-by-layer fixed-point solution of the solved form, mod t^N."""
    if eq.aux_solver is not None:
        return eq.aux_solver(eq, N)
    if eq.rhs_ast is None:
        raise SolveError("equation is not in solved form F = <expr>; "
                         "cannot iterate (non-well-founded as given)")
    N = int(N)
    num, den = _rationalize(eq.rhs_ast)
    rhs = num if den == _ONE else ("div", num, den)
    ev = _LayerEvaluator(rhs, eq.weights)
    tvar, uvar = "t", "u"
    for n in range(N):
        ev.F.append({})
        maxit = 5 * n + 60
        ok = False
        for _ in range(maxit):
            ev.bump()
            try:
                rhs_n = ev.layer(rhs, n, tvar, uvar)
            except SolveError as exc:
                raise SolveError(f"layer t^{n} fails to solve: {exc}", order=n) from exc
            rhs_n = _slice_clean(rhs_n)
            if _slice_eq(rhs_n, ev.F[n]):
                ok = True
                break
            ev.F[n] = rhs_n
        if not ok:
            raise SolveError(f"layer t^{n} does not stabilize "
                             f"(non-well-founded equation)", order=n)
        ev.frozen = n + 1
    F = BivariateSeries({Fraction(n): sl for n, sl in enumerate(ev.F) if sl}, N)
    unknowns = [b.apply(F) for b in eq.bindings]
    sol = SeriesSolution(eq, F, unknowns, N)
    res = sol.residual()
    if not res.is_zero_mod_order():
        v = res.t_valuation()
        raise SolveError(f"residual nonzero at t^{v} (over-determined layer)",
                         order=v)
    return sol
