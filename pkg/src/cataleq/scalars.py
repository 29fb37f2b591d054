"""Exact scalar arithmetic: rationals and simple algebraic extensions Q(theta).

Scalars flowing through the series engine are either `fractions.Fraction`
(fast path, pure rational data) or sympy expressions (weight symbols such as
z_i or s, and algebraic numbers such as I or sqrt(2)).  `AlgebraicScalar`
packages an element of a single extension Q(theta) together with the minimal
polynomial of theta and isolation data selecting which root theta denotes;
it converts to a sympy expression at the series boundary.
"""

from __future__ import annotations

from fractions import Fraction

import sympy as sp


# ---------------------------------------------------------------------------
# generic scalar helpers (Fraction | sympy Expr)
# ---------------------------------------------------------------------------

def to_scalar(x):
    """Coerce ints / sympy Rationals / strings to Fraction; leave sympy exprs."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, sp.Rational):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, sp.Expr):
        return x
    if isinstance(x, AlgebraicScalar):
        return x.as_expr()
    raise TypeError(f"cannot make a scalar out of {x!r}")


def is_rational(c):
    return isinstance(c, (int, Fraction)) or (isinstance(c, sp.Expr) and c.is_Rational)


def as_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, sp.Expr) and c.is_Rational:
        return Fraction(int(c.p), int(c.q))
    raise ValueError(f"{c!r} is not rational")


def as_sympy(c):
    if isinstance(c, Fraction):
        return sp.Rational(c.numerator, c.denominator)
    if isinstance(c, int):
        return sp.Integer(c)
    if isinstance(c, AlgebraicScalar):
        return c.as_expr()
    return sp.sympify(c)


def normalize_scalar(c):
    """Canonical form: Fraction when rational, cancelled sympy expr otherwise."""
    if isinstance(c, (Fraction, int)):
        return Fraction(c)
    if isinstance(c, sp.Expr):
        if c.is_Rational:
            return Fraction(int(c.p), int(c.q))
        return sp.cancel(sp.expand(c))
    if isinstance(c, AlgebraicScalar):
        return normalize_scalar(c.as_expr())
    raise TypeError(f"not a scalar: {c!r}")


def scalar_is_zero(c):
    if isinstance(c, (Fraction, int)):
        return c == 0
    if isinstance(c, AlgebraicScalar):
        return c.is_zero()
    e = sp.cancel(sp.expand(c))
    if e == 0:
        return True
    if e.is_number:
        if e.is_nonzero:
            return False
        e = sp.nsimplify(sp.radsimp(e))
        return sp.simplify(e) == 0
    return sp.simplify(e) == 0


def scalar_eq(a, b):
    return scalar_is_zero(sadd(a, smul(-1, b)))


def sadd(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return as_sympy(a) + as_sympy(b)


def smul(a, b):
    if isinstance(a, (int, Fraction)) and isinstance(b, Fraction):
        return Fraction(a) * b
    if isinstance(a, Fraction) and isinstance(b, int):
        return a * b
    return as_sympy(a) * as_sympy(b)


def sdiv(a, b):
    if isinstance(a, Fraction) and isinstance(b, (int, Fraction)):
        return a / Fraction(b)
    return sp.cancel(as_sympy(a) / as_sympy(b))


def scalar_sqrt(c, branch="principal"):
    """Exact square root; Fractions stay Fractions when the root is rational."""
    if isinstance(c, (int, Fraction)):
        f = Fraction(c)
        if f >= 0:
            num = _isqrt_exact(f.numerator)
            den = _isqrt_exact(f.denominator)
            if num is not None and den is not None:
                return Fraction(num, den)
        return sp.sqrt(as_sympy(c))
    return sp.sqrt(as_sympy(c))


def _isqrt_exact(n):
    import math

    r = math.isqrt(n)
    return r if r * r == n else None


# ---------------------------------------------------------------------------
# algebraic numbers
# ---------------------------------------------------------------------------

def _poly_trim(cs):
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return cs


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _poly_trim(out)


def _poly_add(a, b):
    n = max(len(a), len(b))
    return _poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                       for i in range(n)])


def _poly_divmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = c
        for i, bc in enumerate(b):
            a[k + i] -= c * bc
        a = _poly_trim(a)
    return _poly_trim(q), a


def _poly_xgcd(a, b):
    # extended Euclid over Q[x]: returns (g, s, t) with s*a + t*b = g
    r0, r1 = list(a), list(b)
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_add(s0, _poly_mul([Fraction(-1)], _poly_mul(q, s1)))
        t0, t1 = t1, _poly_add(t0, _poly_mul([Fraction(-1)], _poly_mul(q, t1)))
    return r0, s0, t0


class AlgebraicScalar:
    """An element of Q(theta) for a single algebraic number theta.

    extension: minimal polynomial of theta, monic and squarefree, as a tuple
        of Fractions in ascending degree (constant first, leading coeff 1).
    value: coefficients of the element as a polynomial in theta, deg < deg(ext).
    isolation: ("real", lo, hi) or ("complex", re_lo, re_hi, im_lo, im_hi),
        a box containing exactly one root of the extension.
    """

    __slots__ = ("extension", "value", "isolation")

    def __init__(self, extension, value, isolation):
        ext = tuple(Fraction(c) for c in extension)
        if not ext or ext[-1] != 1:
            raise ValueError("extension must be monic")
        if len(ext) < 2:
            raise ValueError("extension must have positive degree")
        val = _poly_trim([Fraction(c) for c in value])
        if len(val) >= len(ext):
            _, val = _poly_divmod(val, list(ext))
        object.__setattr__(self, "extension", ext)
        object.__setattr__(self, "value", tuple(val))
        object.__setattr__(self, "isolation", tuple(isolation))

    def __setattr__(self, *a):
        raise AttributeError("AlgebraicScalar is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def theta(cls, extension, isolation):
        return cls(extension, (0, 1), isolation)

    @classmethod
    def rational(cls, q, like):
        return cls(like.extension, (Fraction(q),), like.isolation)

    # -- predicates --------------------------------------------------------
    def is_zero(self):
        return not self.value

    def is_rational(self):
        return len(self.value) <= 1

    def degree(self):
        return len(self.extension) - 1

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, AlgebraicScalar):
            if other.extension != self.extension:
                raise ValueError("mixed extensions; build a primitive element first")
            return other
        if isinstance(other, (int, Fraction)):
            return AlgebraicScalar.rational(other, self)
        if isinstance(other, sp.Rational):
            return AlgebraicScalar.rational(Fraction(int(other.p), int(other.q)), self)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return AlgebraicScalar(self.extension, _poly_add(list(self.value), list(o.value)),
                               self.isolation)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicScalar(self.extension, [-c for c in self.value], self.isolation)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        prod = _poly_mul(list(self.value), list(o.value))
        _, rem = _poly_divmod(prod, list(self.extension))
        return AlgebraicScalar(self.extension, rem, self.isolation)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero algebraic scalar")
        g, s, _ = _poly_xgcd(list(self.value), list(self.extension))
        if len(g) != 1:
            raise ValueError("extension not squarefree / value not invertible")
        inv = [c / g[0] for c in s]
        _, rem = _poly_divmod(inv, list(self.extension))
        return AlgebraicScalar(self.extension, rem, self.isolation)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = AlgebraicScalar.rational(1, self)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, sp.Rational)):
            other = self._coerce(other)
        if not isinstance(other, AlgebraicScalar):
            return NotImplemented
        return self.extension == other.extension and self.value == other.value

    def __hash__(self):
        return hash((self.extension, self.value))

    # -- conversion --------------------------------------------------------
    def theta_expr(self):
        """The sympy expression for theta selected by the isolation data."""
        x = sp.Symbol("_theta")
        poly = sp.Poly([sp.Rational(c.numerator, c.denominator)
                        for c in reversed(self.extension)], x)
        roots = sp.Poly(poly, x).all_roots()
        for r in roots:
            rv = complex(sp.N(r, 30))
            if self._contains(rv):
                return r
        raise ValueError("isolation box contains no root of the extension")

    def _contains(self, z):
        iso = self.isolation
        if iso[0] == "real":
            return abs(z.imag) < 1e-9 and float(iso[1]) - 1e-9 <= z.real <= float(iso[2]) + 1e-9
        return (float(iso[1]) - 1e-9 <= z.real <= float(iso[2]) + 1e-9
                and float(iso[3]) - 1e-9 <= z.imag <= float(iso[4]) + 1e-9)

    def as_expr(self):
        th = self.theta_expr()
        out = sp.Integer(0)
        for i, c in enumerate(self.value):
            out += sp.Rational(c.numerator, c.denominator) * th ** i
        return sp.radsimp(sp.expand(out))

    def __repr__(self):
        return f"AlgebraicScalar({self.as_expr()})"


def primitive_element(a: AlgebraicScalar, b: AlgebraicScalar):
    """A single extension containing both a and b (gamma = theta_a + l*theta_b).

    Returns (gamma, a', b') with a', b' images of a, b in Q(gamma).  Raises
    when no small multiplier l works (kept deliberately simple: the corpus
    needs at most one extension at a time).
    """
    if a.extension == b.extension:
        return a, a, b
    ea, eb = a.theta_expr(), b.theta_expr()
    for ell in range(1, 6):
        gamma_expr = ea + ell * eb
        x = sp.Symbol("x")
        try:
            mp = sp.minimal_polynomial(gamma_expr, x)
        except Exception:
            continue
        mono = sp.Poly(mp, x).monic()
        ext = tuple(Fraction(int(c.p), int(c.q)) for c in mono.all_coeffs()[::-1])
        gv = complex(sp.N(gamma_expr, 30))
        eps = Fraction(1, 10**6)
        iso = ("complex",
               Fraction(gv.real).limit_denominator(10**9) - eps,
               Fraction(gv.real).limit_denominator(10**9) + eps,
               Fraction(gv.imag).limit_denominator(10**9) - eps,
               Fraction(gv.imag).limit_denominator(10**9) + eps)
        gamma = AlgebraicScalar.theta(ext, iso)
        try:
            av = _express_in(ea, gamma)
            bv = _express_in(eb, gamma)
        except ValueError:
            continue
        return gamma, av, bv
    raise ValueError("failed to build a primitive element for the two extensions")


def _express_in(expr, gamma: AlgebraicScalar):
    """Write an algebraic sympy number as an element of Q(gamma)."""
    g = gamma.theta_expr()
    try:
        an = sp.to_number_field(expr, g)
    except Exception as exc:
        raise ValueError(f"element does not lie in Q(gamma): {exc}") from exc
    vals = [Fraction(int(c.p), int(c.q)) for c in reversed(an.coeffs())]
    return AlgebraicScalar(gamma.extension, vals, gamma.isolation)
