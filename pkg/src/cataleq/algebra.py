"""Sparse multivariate polynomials and determinant-based constructions.

The workhorses: resultants (Sylvester determinants, computed by subresultant
PRS), the discriminant with its (-1)^(n(n-1)/2)/lc normalization, the
generalized Sylvester submatrices S_k whose determinant chain detects k
common roots, exact division / gcd / squarefree plumbing, linear-algebra
guessing of annihilating polynomials from series data, and real-root
isolation.
"""

from __future__ import annotations

from fractions import Fraction

import sympy as sp

from .scalars import as_fraction, as_sympy


# ---------------------------------------------------------------------------
# MPoly: a thin canonical carrier over sympy
# ---------------------------------------------------------------------------

class MPoly:
    """Sparse multivariate polynomial: ordered variables + exponent->coeff map.

    Coefficients are exact sympy numbers (rationals, or algebraic numbers
    such as I when an extension is in play).  Instances are immutable.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, variables, terms):
        object.__setattr__(self, "vars", tuple(variables))
        clean = {}
        nv = len(self.vars)
        for exps, c in terms.items():
            c = as_sympy(c)
            if c == 0:
                continue
            exps = tuple(int(e) for e in exps)
            if len(exps) != nv:
                raise ValueError("exponent vector length mismatch")
            clean[exps] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("MPoly is immutable")

    # -- construction ------------------------------------------------------
    @classmethod
    def from_expr(cls, expr, variables):
        variables = tuple(variables)
        expr = sp.expand(sp.sympify(expr))
        if expr == 0:
            return cls(variables, {})
        poly = sp.Poly(expr, *variables)
        terms = {tuple(m): c for m, c in zip(poly.monoms(), poly.coeffs())}
        return cls(variables, terms)

    def as_expr(self):
        out = sp.Integer(0)
        for exps, c in self.terms.items():
            mon = c
            for v, e in zip(self.vars, exps):
                if e:
                    mon *= v ** e
            out += mon
        return out

    # -- queries -----------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def degree(self, var):
        i = self.vars.index(var)
        return max((e[i] for e in self.terms), default=-1)

    def total_degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def coeff_poly(self, var, power):
        """Coefficient of var**power, as an MPoly in the remaining variables."""
        i = self.vars.index(var)
        rest = tuple(v for v in self.vars if v is not var)
        terms = {}
        for exps, c in self.terms.items():
            if exps[i] == power:
                key = tuple(e for j, e in enumerate(exps) if j != i)
                terms[key] = terms.get(key, 0) + c
        return MPoly(rest, terms)

    # -- arithmetic (light; heavy lifting goes through sympy) --------------
    def _binop(self, other, fn):
        if isinstance(other, MPoly):
            if other.vars != self.vars:
                raise ValueError("variable order mismatch")
            other = other.as_expr()
        return MPoly.from_expr(fn(self.as_expr(), sp.sympify(other)), self.vars)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    def __neg__(self):
        return MPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # -- canonical text ----------------------------------------------------
    def sorted_terms(self):
        """Graded-lex descending over the declared variable order."""
        return sorted(self.terms.items(),
                      key=lambda kv: (sum(kv[0]),) + kv[0], reverse=True)

    def leading_coeff(self):
        st = self.sorted_terms()
        return st[0][1] if st else sp.Integer(0)

    def text(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.sorted_terms():
            factors = []
            for v, e in zip(self.vars, exps):
                if e == 1:
                    factors.append(str(v))
                elif e > 1:
                    factors.append(f"{v}^{e}")
            if c == 1 and factors:
                coef = ""
            elif c == -1 and factors:
                coef = "-"
            else:
                coef = _coeff_text(c)
            mono = "*".join(factors)
            if coef in ("", "-"):
                term = coef + mono
            elif mono:
                term = f"{coef}*{mono}"
            else:
                term = coef
            parts.append(term)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"MPoly({self.text()})"


def _coeff_text(c):
    c = sp.nsimplify(c)
    if c.is_Rational:
        return str(c.p) if c.q == 1 else f"{c.p}/{c.q}"
    s = str(c)
    return f"({s})" if ("+" in s or "-" in s[1:]) else s


def _expr(p):
    return p.as_expr() if isinstance(p, MPoly) else sp.sympify(p)


def content_normalize(expr, variables):
    """Primitive part with positive leading coefficient under graded lex."""
    expr = sp.expand(sp.sympify(expr))
    if expr == 0:
        return expr
    poly = sp.Poly(expr, *variables)
    _, prim = poly.primitive()
    mp = MPoly.from_expr(prim.as_expr(), tuple(variables))
    lc = mp.leading_coeff()
    if lc.is_number and lc.is_negative:
        prim = -prim
    return prim.as_expr()


# ---------------------------------------------------------------------------
# resultants and discriminants
# ---------------------------------------------------------------------------

def resultant(P, Q, var):
    """det of the Sylvester matrix of P, Q in var (subresultant PRS inside)."""
    Pe, Qe = _expr(P), _expr(Q)
    if sp.degree(Pe, var) <= 0 and sp.degree(Qe, var) <= 0:
        raise ValueError("no elimination variable")
    res = sp.resultant(Pe, Qe, var)
    return sp.expand(res)


def discriminant(P, var):
    """(-1)^(n(n-1)/2) * Res(P, P') / lc(P)."""
    Pe = _expr(P)
    n = sp.degree(Pe, var)
    if n <= 1:
        raise ValueError("degree too low for discriminant")
    lc = sp.Poly(Pe, var).LC()
    res = sp.resultant(Pe, sp.diff(Pe, var), var)
    sign = (-1) ** ((n * (n - 1)) // 2)
    return sp.expand(sp.cancel(sign * res / lc))


def discriminant_via_matrix(P, var):
    """The (2n-1)-determinant route: monic-normalize, take the determinant of
    the stacked coefficient matrix, rescale by lc^(2n-2)."""
    Pe = _expr(P)
    n = sp.degree(Pe, var)
    if n <= 1:
        raise ValueError("degree too low for discriminant")
    poly = sp.Poly(Pe, var)
    lc = poly.LC()
    mono = [sp.cancel(c / lc) for c in poly.all_coeffs()]  # monic, descending
    dcoeffs = [sp.Integer(n - i) * mono[i] for i in range(n)]  # derivative of monic
    size = 2 * n - 1
    rows = []
    for i in range(n - 1):
        rows.append([sp.Integer(0)] * i + mono + [sp.Integer(0)] * (size - i - (n + 1)))
    for i in range(n):
        rows.append([sp.Integer(0)] * i + dcoeffs + [sp.Integer(0)] * (size - i - n))
    det = bareiss_det(sp.Matrix(rows))
    sign = (-1) ** ((n * (n - 1)) // 2)
    return sp.expand(sp.cancel(sign * det * lc ** (2 * n - 2)))


# ---------------------------------------------------------------------------
# generalized Sylvester submatrices
# ---------------------------------------------------------------------------

class SkMatrix:
    """The side-(m+n-2k) truncation of the Sylvester matrix: n-k rows of P
    coefficients, m-k rows of Q coefficients, last 2k columns removed."""

    __slots__ = ("entries", "k", "m", "n")

    def __init__(self, entries, k, m, n):
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    def __setattr__(self, *a):
        raise AttributeError("SkMatrix is immutable")

    @property
    def side(self):
        return self.m + self.n - 2 * self.k

    def det(self):
        try:
            from sympy.polys.matrices import DomainMatrix
            dm = DomainMatrix.from_Matrix(self.entries)
            return sp.expand(dm.det().as_expr())
        except Exception:
            return sp.expand(bareiss_det(self.entries))


def sk_matrix(P, Q, var, k):
    Pe, Qe = _expr(P), _expr(Q)
    m, n = sp.degree(Pe, var), sp.degree(Qe, var)
    if m <= 0 or n <= 0:
        raise ValueError("no elimination variable")
    if not 0 <= k < min(m, n):
        raise ValueError(f"k={k} out of range for degrees ({m},{n})")
    a = sp.Poly(Pe, var).all_coeffs()  # a_m .. a_0
    b = sp.Poly(Qe, var).all_coeffs()
    size = m + n - 2 * k
    rows = []
    for i in range(n - k):  # rows of P coefficients
        row = [sp.Integer(0)] * i + list(a) + [sp.Integer(0)] * (m + n - (m + 1) - i)
        rows.append(row[:size])
    for i in range(m - k):  # rows of Q coefficients
        row = [sp.Integer(0)] * i + list(b) + [sp.Integer(0)] * (m + n - (n + 1) - i)
        rows.append(row[:size])
    return SkMatrix(sp.Matrix(rows), k, m, n)


def bareiss_det(M):
    """Fraction-free Bareiss determinant; exact over polynomial entries."""
    M = M.copy()
    nrows = M.rows
    if nrows != M.cols:
        raise ValueError("determinant of non-square matrix")
    if nrows == 0:
        return sp.Integer(1)
    sign = 1
    prev = sp.Integer(1)
    for r in range(nrows - 1):
        if M[r, r] == 0:
            for rr in range(r + 1, nrows):
                if M[rr, r] != 0:
                    M.row_swap(r, rr)
                    sign = -sign
                    break
            else:
                return sp.Integer(0)
        for i in range(r + 1, nrows):
            for j in range(r + 1, nrows):
                num = sp.expand(M[r, r] * M[i, j] - M[i, r] * M[r, j])
                M[i, j] = sp.cancel(num / prev) if prev != 1 else num
        prev = M[r, r]
    return sign * M[nrows - 1, nrows - 1]


# ---------------------------------------------------------------------------
# division plumbing
# ---------------------------------------------------------------------------

class NotAFactor(ValueError):
    """Raised when exact_divide has a nonzero remainder (certificate failure)."""


def exact_divide(A, B):
    Ae, Be = _expr(A), _expr(B)
    if Be == 0:
        raise ZeroDivisionError("division by zero polynomial")
    q = sp.cancel(Ae / Be)
    num, den = sp.fraction(sp.together(q))
    if not den.is_number:
        raise NotAFactor(f"not a factor: remainder nonzero dividing by {Be}")
    return sp.expand(num / den)


def poly_gcd(A, B, var=None):
    Ae, Be = _expr(A), _expr(B)
    return sp.gcd(Ae, Be)


def squarefree_part(P, var):
    Pe = _expr(P)
    g = sp.gcd(Pe, sp.diff(Pe, var))
    return sp.expand(exact_divide(Pe, g))


# ---------------------------------------------------------------------------
# exact linear algebra over Q
# ---------------------------------------------------------------------------

def rational_nullspace(rows, ncols):
    """Nullspace basis of the (possibly ragged) rational matrix `rows`.

    rows: iterable of length-ncols lists of Fractions.  Returns a list of
    basis vectors (lists of Fractions), reduced echelon parametrization.
    """
    mat = [list(map(Fraction, r)) for r in rows]
    pivots = []
    prow = 0
    for col in range(ncols):
        pr = None
        for r in range(prow, len(mat)):
            if mat[r][col] != 0:
                pr = r
                break
        if pr is None:
            continue
        mat[prow], mat[pr] = mat[pr], mat[prow]
        pv = mat[prow][col]
        mat[prow] = [x / pv for x in mat[prow]]
        for r in range(len(mat)):
            if r != prow and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[prow])]
        pivots.append(col)
        prow += 1
        if prow == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -mat[r][fc]
        basis.append(vec)
    return basis


# ---------------------------------------------------------------------------
# algebraic approximants (series -> annihilating polynomial guessing)
# ---------------------------------------------------------------------------

APPROXIMANT_GUARD = 5  # extra matched coefficients beyond the unknown count


def algebraic_approximant(coeffs, degree_bounds, tvar=None, vvar=None):
    """Guess P(t, v) with P(t, S(t)) = O(t^N) from the series coefficients.

    coeffs: list of rationals, S(t) = sum coeffs[n] t^n known to order N=len.
    degree_bounds: (d_t, d_v).  Returns a primitive MPoly in (t, v) with
    positive graded-lex leading coefficient, or None when only the zero
    solution exists.
    """
    d_t, d_v = degree_bounds
    tvar = tvar if tvar is not None else sp.Symbol("t")
    vvar = vvar if vvar is not None else sp.Symbol("v")
    N = len(coeffs)
    nunk = (d_t + 1) * (d_v + 1)
    if N < nunk + APPROXIMANT_GUARD:
        raise ValueError("order too small for bounds")
    coeffs = [as_fraction(c) for c in coeffs]
    # powers of S modulo t^N
    powers = [[Fraction(1)] + [Fraction(0)] * (N - 1)]
    for _ in range(d_v):
        prev = powers[-1]
        nxt = [Fraction(0)] * N
        for i, a in enumerate(coeffs):
            if a == 0:
                continue
            for j, b in enumerate(prev):
                if i + j >= N:
                    break
                if b != 0:
                    nxt[i + j] += a * b
        powers.append(nxt)
    cols = [(a, b) for a in range(d_t + 1) for b in range(d_v + 1)]
    rows = []
    for n in range(N):
        row = []
        for a, b in cols:
            row.append(powers[b][n - a] if 0 <= n - a < N else Fraction(0))
        rows.append(row)
    basis = rational_nullspace(rows, len(cols))
    if not basis:
        return None
    vec = basis[0]
    terms = {}
    for (a, b), c in zip(cols, vec):
        if c != 0:
            terms[(a, b)] = sp.Rational(c.numerator, c.denominator)
    cand = MPoly((tvar, vvar), terms)
    expr = content_normalize(cand.as_expr(), (tvar, vvar))
    return MPoly.from_expr(expr, (tvar, vvar))


# ---------------------------------------------------------------------------
# real-root isolation
# ---------------------------------------------------------------------------

def real_root_isolate(P, var=None, eps=None):
    """Disjoint rational isolating intervals, one per real root."""
    Pe = _expr(P)
    syms = list(Pe.free_symbols)
    if var is None:
        if len(syms) != 1:
            raise ValueError("univariate polynomial required")
        var = syms[0]
    if Pe == 0:
        raise ValueError("zero polynomial")
    poly = sp.Poly(Pe, var)
    kwargs = {}
    if eps is not None:
        kwargs["eps"] = sp.Rational(eps.numerator, eps.denominator) if isinstance(eps, Fraction) else sp.Rational(eps)
    ivs = poly.intervals(**kwargs)
    out = []
    for (lo, hi), mult in ivs:
        out.append((Fraction(int(lo.p), int(lo.q)), Fraction(int(hi.p), int(hi.q))))
    return out
