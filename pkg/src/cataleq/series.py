"""Truncated fractional power series in t, and truncated elements of K[u][[t]].

PuiseuxSeries carries the roots U_i (fractional exponents, scalars in Q, in a
single algebraic extension, or rational functions of weight symbols).
BivariateSeries carries the catalytic series F(t,u): one polynomial-in-u
slice per t-exponent.  Truncation orders are tracked pessimistically: an
operation never reports coefficients beyond its certified order.

Exponents are Fractions throughout; a series on the integer lattice simply
has denominator-1 exponents.  Orders may be float('inf') for exact data.
"""

from __future__ import annotations

import math
from fractions import Fraction

import sympy as sp

from .scalars import (as_sympy, normalize_scalar, scalar_is_zero, scalar_sqrt,
                      to_scalar)

INF = math.inf


def _frac(e):
    if isinstance(e, Fraction):
        return e
    if isinstance(e, int):
        return Fraction(e)
    if isinstance(e, sp.Rational):
        return Fraction(int(e.p), int(e.q))
    if e == INF:
        return INF
    raise TypeError(f"bad exponent {e!r}")


class BeyondTruncation(ValueError):
    """Requested coefficient lies at or above the certified order."""


# ---------------------------------------------------------------------------
# univariate Puiseux series
# ---------------------------------------------------------------------------

class PuiseuxSeries:
    """coeffs: {Fraction exponent: scalar}; known modulo t^order."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order, *, normalize=True):
        order = order if order == INF else _frac(order)
        clean = {}
        for e, c in coeffs.items():
            e = _frac(e)
            if e >= order:
                continue
            if normalize:
                c = normalize_scalar(c)
                if scalar_is_zero(c):
                    continue
            clean[e] = c
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "order", order)

    def __setattr__(self, *a):
        raise AttributeError("PuiseuxSeries is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, order=INF):
        return cls({}, order)

    @classmethod
    def const(cls, c, order=INF):
        return cls({Fraction(0): to_scalar(c)}, order)

    @classmethod
    def t_power(cls, e, c=1, order=INF):
        return cls({_frac(e): to_scalar(c)}, order)

    @classmethod
    def from_terms(cls, terms, order):
        if isinstance(terms, dict):
            terms = terms.items()
        return cls({_frac(e): to_scalar(c) for e, c in terms}, order)

    # -- structure ---------------------------------------------------------
    @property
    def ramification(self):
        d = 1
        for e in self.coeffs:
            d = d * e.denominator // math.gcd(d, e.denominator)
        return d

    def valuation(self):
        """Smallest exponent with nonzero coefficient; None if zero mod order."""
        return min(self.coeffs) if self.coeffs else None

    def _val_or_order(self):
        v = self.valuation()
        return v if v is not None else self.order

    def is_zero_mod_order(self):
        return not self.coeffs

    def coeff(self, e):
        e = _frac(e)
        if e >= self.order:
            raise BeyondTruncation(f"t^{e} beyond truncation t^{self.order}")
        return self.coeffs.get(e, Fraction(0))

    def truncate(self, order):
        order = min(self.order, order if order == INF else _frac(order))
        return PuiseuxSeries({e: c for e, c in self.coeffs.items() if e < order},
                            order, normalize=False)

    def eq_mod(self, other, order):
        diff = self - other
        v = diff.valuation()
        return v is None or v >= min(order, diff.order)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, PuiseuxSeries):
            return other
        return PuiseuxSeries.const(to_scalar(other))

    def __add__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        out = dict(self.coeffs)
        for e, c in o.coeffs.items():
            out[e] = _sadd(out[e], c) if e in out else c
        return PuiseuxSeries(out, order)

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries({e: -c for e, c in self.coeffs.items()}, self.order,
                            normalize=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PuiseuxSeries):
            c = to_scalar(other)
            if isinstance(c, Fraction):
                return PuiseuxSeries({e: (x * c if isinstance(x, Fraction) else as_sympy(x) * as_sympy(c))
                                      for e, x in self.coeffs.items()}, self.order)
            cs = as_sympy(c)
            return PuiseuxSeries({e: as_sympy(x) * cs for e, x in self.coeffs.items()},
                                self.order)
        o = other
        order = min(self.order + o._val_or_order(), o.order + self._val_or_order())
        out = {}
        for e1, c1 in self.coeffs.items():
            rat1 = isinstance(c1, Fraction)
            for e2, c2 in o.coeffs.items():
                e = e1 + e2
                if e >= order:
                    continue
                p = c1 * c2 if rat1 and isinstance(c2, Fraction) else as_sympy(c1) * as_sympy(c2)
                if e in out:
                    a = out[e]
                    out[e] = a + p if isinstance(a, Fraction) and isinstance(p, Fraction) else as_sympy(a) + as_sympy(p)
                else:
                    out[e] = p
        return PuiseuxSeries(out, order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PuiseuxSeries):
            return self * other.inverse()
        c = to_scalar(other)
        if isinstance(c, Fraction):
            return self * (Fraction(1) / c)
        return self * (sp.Integer(1) / as_sympy(c))

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n):
        n = int(n)
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return PuiseuxSeries.const(1, order=self.order)
        out = None
        base = self
        while n:
            if n & 1:
                out = base if out is None else out * base
            if n > 1:
                base = base * base
            n >>= 1
        return out

    def t_shift(self, e):
        e = _frac(e)
        return PuiseuxSeries({k + e: c for k, c in self.coeffs.items()},
                            self.order + e, normalize=False)

    def _lattice(self, order):
        """Denominator d such that all exponents below `order` live in (1/d)Z."""
        d = 1
        for e in self.coeffs:
            d = d * e.denominator // math.gcd(d, e.denominator)
        if order != INF:
            d = d * order.denominator // math.gcd(d, order.denominator)
        return d

    def inverse(self):
        """Multiplicative inverse; valuation may be nonzero (Laurent shift)."""
        v = self.valuation()
        if v is None:
            raise ZeroDivisionError("not a unit: series is 0 mod order")
        if len(self.coeffs) == 1:
            c = self.coeffs[v]
            inv = Fraction(1) / c if isinstance(c, Fraction) else sp.cancel(sp.Integer(1) / as_sympy(c))
            return PuiseuxSeries({-v: inv}, INF if self.order == INF else self.order - 2 * v)
        if self.order == INF:
            raise ValueError("truncate before inverting an exact multi-term series")
        unit = self.t_shift(-v)          # valuation 0, order = self.order - v
        n_order = unit.order
        lead = unit.coeffs[Fraction(0)]
        inv_lead = (Fraction(1) / lead) if isinstance(lead, Fraction) else sp.cancel(sp.Integer(1) / as_sympy(lead))
        d = unit._lattice(n_order)
        out = {Fraction(0): inv_lead}
        nmax = math.ceil(n_order * d)
        for n in range(1, nmax):
            e = Fraction(n, d)
            if e >= n_order:
                break
            s = Fraction(0)
            for eu, cu in unit.coeffs.items():
                if eu == 0 or eu > e:
                    continue
                c_prev = out.get(e - eu)
                if c_prev is None:
                    continue
                s = _sadd(s, _smul(cu, c_prev))
            if not scalar_is_zero(s):
                out[e] = -_smul(s, inv_lead)
        res = PuiseuxSeries(out, n_order)
        return res.t_shift(-v)

    def sqrt(self, *, extend=True):
        """T with T^2 = self mod order; principal branch on the leading scalar."""
        v = self.valuation()
        if v is None:
            return PuiseuxSeries.zero(self.order)
        lead = self.coeffs[v]
        root_lead = scalar_sqrt(lead)
        if not extend and not isinstance(root_lead, Fraction):
            raise ValueError("non-square leading coefficient with extension disabled")
        inv_lead = Fraction(1) / lead if isinstance(lead, Fraction) else sp.cancel(sp.Integer(1) / as_sympy(lead))
        unit = self.t_shift(-v) * inv_lead
        if len(unit.coeffs) == 1:
            return PuiseuxSeries({v / 2: root_lead},
                                INF if self.order == INF else self.order - v / 2)
        if self.order == INF:
            raise ValueError("truncate before taking sqrt of an exact multi-term series")
        # unit = 1 + B; solve s_e by 2 s_e = b_e - sum_{0<i<e} s_i s_{e-i}
        n_order = unit.order
        d = unit._lattice(n_order)
        out = {Fraction(0): Fraction(1)}
        nmax = math.ceil(n_order * d)
        for n in range(1, nmax):
            e = Fraction(n, d)
            if e >= n_order:
                break
            s = unit.coeffs.get(e, Fraction(0))
            for m in range(1, n):
                e1, e2 = Fraction(m, d), Fraction(n - m, d)
                if e1 in out and e2 in out:
                    s = _ssub(s, _smul(out[e1], out[e2]))
            coeff = s / 2 if isinstance(s, Fraction) else sp.cancel(as_sympy(s) / 2)
            if not scalar_is_zero(coeff):
                out[e] = coeff
        res = PuiseuxSeries(out, n_order) * root_lead
        return res.t_shift(v / 2)

    # -- rendering ---------------------------------------------------------
    def text(self):
        if not self.coeffs:
            return f"0 + O(t^{_ordtext(self.order)})"
        parts = []
        for e in sorted(self.coeffs):
            c = self.coeffs[e]
            cs = str(c) if not isinstance(c, Fraction) else (
                str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}")
            if ("+" in cs[1:]) or ("-" in cs[1:]) or " " in cs:
                cs = f"({cs})"
            if e == 0:
                parts.append(cs)
            else:
                parts.append(f"{cs} * t^{_ordtext(e)}" if e.denominator > 1 or e != 1
                             else f"{cs} * t")
        return " + ".join(parts) + f" + O(t^{_ordtext(self.order)})"

    def __repr__(self):
        return f"PuiseuxSeries({self.text()})"


def _ordtext(e):
    if e == INF:
        return "oo"
    e = _frac(e)
    return str(e.numerator) if e.denominator == 1 else f"({e.numerator}/{e.denominator})"


def _sadd(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    return as_sympy(a) + as_sympy(b)


def _ssub(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a - b
    return as_sympy(a) - as_sympy(b)


def _smul(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return as_sympy(a) * as_sympy(b)


# ---------------------------------------------------------------------------
# bivariate series: polynomial (or Laurent) slices in u per t-exponent
# ---------------------------------------------------------------------------

class BivariateSeries:
    """coeffs: {Fraction t-exponent: {int u-exponent: scalar}} mod t^order."""

    __slots__ = ("coeffs", "order", "laurent")

    def __init__(self, coeffs, order, *, laurent=False, normalize=True):
        order = order if order == INF else _frac(order)
        clean = {}
        for e, sl in coeffs.items():
            e = _frac(e)
            if e >= order or e < 0:
                if e >= order:
                    continue
                raise ValueError("negative t-exponent in bivariate series")
            slc = {}
            for j, c in sl.items():
                j = int(j)
                if j < 0 and not laurent:
                    raise ValueError("negative u-exponent outside laurent mode")
                if normalize:
                    c = normalize_scalar(c)
                    if scalar_is_zero(c):
                        continue
                slc[j] = c
            if slc:
                clean[e] = slc
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "laurent", bool(laurent))

    def __setattr__(self, *a):
        raise AttributeError("BivariateSeries is immutable")

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, order=INF, laurent=False):
        return cls({}, order, laurent=laurent)

    @classmethod
    def const(cls, c, order=INF, laurent=False):
        return cls({Fraction(0): {0: to_scalar(c)}}, order, laurent=laurent)

    @classmethod
    def monomial(cls, c, t_exp, u_exp, order=INF, laurent=False):
        return cls({_frac(t_exp): {int(u_exp): to_scalar(c)}}, order, laurent=laurent)

    @classmethod
    def from_upoly(cls, expr, u, order=INF, laurent=False):
        """A t-independent polynomial (or Laurent polynomial) in u."""
        expr = sp.together(sp.sympify(expr))
        num, den = sp.fraction(expr)
        slc = {}
        dpoly = sp.Poly(den, u) if den.free_symbols & {u} else None
        if dpoly is not None:
            if not laurent or len(dpoly.monoms()) != 1:
                raise ValueError("non-polynomial u-dependence")
            shift = dpoly.monoms()[0][0]
            dc = dpoly.coeffs()[0]
            num = sp.expand(num / dc)
        else:
            shift = 0
            num = sp.expand(expr)
        p = sp.Poly(num, u)
        for (m,), c in zip(p.monoms(), p.coeffs()):
            slc[m - shift] = c
        return cls({Fraction(0): slc}, order, laurent=laurent)

    # -- structure ---------------------------------------------------------
    def t_valuation(self):
        return min(self.coeffs) if self.coeffs else None

    def _val_or_order(self):
        v = self.t_valuation()
        return v if v is not None else self.order

    def is_zero_mod_order(self):
        return not self.coeffs

    def slice(self, e):
        """The polynomial slice at t^e as a dict {u_exp: scalar}."""
        e = _frac(e)
        if e >= self.order:
            raise BeyondTruncation(f"t^{e} beyond truncation t^{self.order}")
        return dict(self.coeffs.get(e, {}))

    def slice_expr(self, e, u):
        return _slice_to_expr(self.slice(e), u)

    def coeff(self, t_exp, u_exp):
        e = _frac(t_exp)
        if e >= self.order:
            raise BeyondTruncation(f"t^{e} beyond truncation t^{self.order}")
        return self.coeffs.get(e, {}).get(int(u_exp), Fraction(0))

    def u_coeff_series(self, u_exp):
        """[u^j] as a PuiseuxSeries in t."""
        j = int(u_exp)
        return PuiseuxSeries({e: sl[j] for e, sl in self.coeffs.items() if j in sl},
                            self.order, normalize=False)

    def u_degree(self):
        return max((max(sl) for sl in self.coeffs.values()), default=None)

    def truncate(self, order):
        order = min(self.order, order if order == INF else _frac(order))
        return BivariateSeries({e: sl for e, sl in self.coeffs.items() if e < order},
                              order, laurent=self.laurent, normalize=False)

    def eq_mod(self, other, order):
        diff = self - other
        v = diff.t_valuation()
        return v is None or v >= min(order, diff.order)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, BivariateSeries):
            return other
        if isinstance(other, PuiseuxSeries):
            return BivariateSeries({e: {0: c} for e, c in other.coeffs.items()},
                                  other.order, laurent=self.laurent, normalize=False)
        return BivariateSeries.const(to_scalar(other), laurent=self.laurent)

    def __add__(self, other):
        o = self._coerce(other)
        order = min(self.order, o.order)
        out = {e: dict(sl) for e, sl in self.coeffs.items()}
        for e, sl in o.coeffs.items():
            dst = out.setdefault(e, {})
            for j, c in sl.items():
                if j in dst:
                    dst[j] = _sadd(dst[j], c)
                else:
                    dst[j] = c
        return BivariateSeries(out, order, laurent=self.laurent or o.laurent)

    __radd__ = __add__

    def __neg__(self):
        return BivariateSeries({e: {j: -c for j, c in sl.items()}
                               for e, sl in self.coeffs.items()},
                              self.order, laurent=self.laurent, normalize=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, (BivariateSeries, PuiseuxSeries)):
            c = to_scalar(other)
            return BivariateSeries({e: {j: _smul(x, c) for j, x in sl.items()}
                                   for e, sl in self.coeffs.items()},
                                  self.order, laurent=self.laurent)
        o = self._coerce(other)
        order = min(self.order + o._val_or_order(), o.order + self._val_or_order())
        out = {}
        for e1, sl1 in self.coeffs.items():
            for e2, sl2 in o.coeffs.items():
                e = e1 + e2
                if e >= order:
                    continue
                dst = out.setdefault(e, {})
                for j1, c1 in sl1.items():
                    rat1 = isinstance(c1, Fraction)
                    for j2, c2 in sl2.items():
                        j = j1 + j2
                        p = c1 * c2 if rat1 and isinstance(c2, Fraction) else as_sympy(c1) * as_sympy(c2)
                        if j in dst:
                            a = dst[j]
                            dst[j] = a + p if isinstance(a, Fraction) and isinstance(p, Fraction) else as_sympy(a) + as_sympy(p)
                        else:
                            dst[j] = p
        return BivariateSeries(out, order, laurent=self.laurent or o.laurent)

    __rmul__ = __mul__

    def __pow__(self, n):
        n = int(n)
        if n < 0:
            raise ValueError("negative power of bivariate series; use divide")
        if n == 0:
            return BivariateSeries.const(1, order=self.order, laurent=self.laurent)
        out = None
        base = self
        while n:
            if n & 1:
                out = base if out is None else out * base
            if n > 1:
                base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        if isinstance(other, (BivariateSeries, PuiseuxSeries)):
            return self.divide(self._coerce(other))
        c = to_scalar(other)
        inv = Fraction(1) / c if isinstance(c, Fraction) else sp.cancel(sp.Integer(1) / as_sympy(c))
        return self * inv

    def u_shift(self, j):
        j = int(j)
        if j < 0 and not self.laurent:
            # denominator u^{-j}: every slice must divide exactly
            for e, sl in self.coeffs.items():
                if any(k + j < 0 for k in sl):
                    raise ValueError(f"u-shift by {j} leaves negative exponents at t^{e}")
        return BivariateSeries({e: {k + j: c for k, c in sl.items()}
                               for e, sl in self.coeffs.items()},
                              self.order, laurent=self.laurent, normalize=False)

    def t_shift(self, e):
        e = _frac(e)
        return BivariateSeries({k + e: sl for k, sl in self.coeffs.items()},
                              self.order + e, laurent=self.laurent, normalize=False)

    def u_derivative(self):
        out = {}
        for e, sl in self.coeffs.items():
            dst = {}
            for j, c in sl.items():
                if j != 0:
                    dst[j - 1] = _smul(c, Fraction(j))
            if dst:
                out[e] = dst
        return BivariateSeries(out, self.order, laurent=self.laurent, normalize=False)

    # -- division ----------------------------------------------------------
    def divide(self, D):
        """Exact division by D in K[u][[t]]: slice-by-slice with exact
        polynomial division by D's t-leading slice; raises on remainders."""
        Dv = D.t_valuation()
        if Dv is None:
            raise ZeroDivisionError("division by series that is 0 mod order")
        Xv = self._val_or_order()
        X = self
        if Dv > 0:
            if Xv < Dv:
                raise ValueError("division would leave negative t-exponents")
            X = X.t_shift(-Dv)
            D = D.t_shift(-Dv)
        D0 = D.slice(Fraction(0))
        order = min(X.order, D.order)
        if order == INF:
            raise ValueError("truncate before dividing exact series")
        u = sp.Symbol("_udiv")
        d0e = _slice_to_expr(D0, u)
        d0_const = set(D0) == {0}
        d0_inv = None
        if d0_const:
            c = D0[0]
            d0_inv = Fraction(1) / c if isinstance(c, Fraction) else sp.cancel(sp.Integer(1) / as_sympy(c))
        lat = 1
        for e in list(X.coeffs) + list(D.coeffs):
            lat = lat * e.denominator // math.gcd(lat, e.denominator)
        if order != INF:
            lat = lat * order.denominator // math.gcd(lat, order.denominator)
        out = {}
        sub_lo = min((min(sl) for sl in X.coeffs.values()), default=0)
        for n in range(math.ceil(order * lat)):
            e = Fraction(n, lat)
            if e >= order:
                break
            acc = dict(X.coeffs.get(e, {}))
            for ed, sld in D.coeffs.items():
                if ed == 0 or ed > e:
                    continue
                q_prev = out.get(e - ed)
                if not q_prev:
                    continue
                for j1, c1 in sld.items():
                    for j2, c2 in q_prev.items():
                        j = j1 + j2
                        p = _smul(c1, c2)
                        acc[j] = _ssub(acc[j], p) if j in acc else -p
            acc = {j: c for j, (c) in ((j, normalize_scalar(c)) for j, c in acc.items())
                   if not scalar_is_zero(c)}
            if not acc:
                continue
            if d0_const:
                out[e] = {j: _smul(c, d0_inv) for j, c in acc.items()}
                continue
            nume = _slice_to_expr(acc, u)
            q, r = sp.div(nume, d0e, u)
            if sp.expand(sp.cancel(r)) != 0:
                raise ValueError(f"non-exact division at t^{e}: remainder {r}")
            qsl = _expr_to_slice(sp.expand(q), u)
            if qsl:
                out[e] = qsl
        if sub_lo < 0 and not (self.laurent or D.laurent):
            raise ValueError("negative u-exponents outside laurent mode")
        return BivariateSeries(out, order, laurent=self.laurent or D.laurent)

    def unit_inverse(self):
        v = self.t_valuation()
        if v != 0:
            raise ZeroDivisionError("not a unit")
        sl0 = self.slice(Fraction(0))
        if set(sl0) != {0}:
            # still fine if the constant slice is a unit polynomial (constant)
            raise ZeroDivisionError("not a unit: t^0 slice is non-constant")
        return BivariateSeries.const(1, order=self.order, laurent=self.laurent).divide(self)

    def sqrt(self):
        """T with T^2 = self; the t^0 slice must be the square of a polynomial."""
        if self.is_zero_mod_order():
            return BivariateSeries.zero(self.order, laurent=self.laurent)
        v = self.t_valuation()
        if v != 0:
            raise ValueError("bivariate sqrt implemented for unit t-valuation only")
        u = sp.Symbol("_usqrt")
        s0 = self.slice_expr(Fraction(0), u)
        content, factors = sp.factor_list(s0, u)
        r0 = sp.sqrt(content)
        for base, exp in factors:
            if exp % 2:
                raise ValueError("t^0 slice is not a polynomial square")
            r0 *= base ** (exp // 2)
        r0 = sp.expand(r0)
        if sp.expand(r0 * r0 - s0) != 0:
            raise ValueError("t^0 slice is not a polynomial square")
        two_r0 = sp.expand(2 * r0)
        order = self.order
        if order == INF:
            raise ValueError("truncate before taking sqrt of exact series")
        out = {Fraction(0): _expr_to_slice(r0, u)}
        lat = 1
        for e in self.coeffs:
            lat = lat * e.denominator // math.gcd(lat, e.denominator)
        lat = lat * order.denominator // math.gcd(lat, order.denominator)
        for n in range(1, math.ceil(order * lat)):
            e = Fraction(n, lat)
            if e >= order:
                break
            acc = dict(self.coeffs.get(e, {}))
            # subtract sum_{0<e1<e} T_{e1} T_{e-e1}
            for m in range(1, n):
                e1, e2 = Fraction(m, lat), Fraction(n - m, lat)
                if e1 not in out or e2 not in out:
                    continue
                for j1, c1 in out[e1].items():
                    for j2, c2 in out[e2].items():
                        j = j1 + j2
                        p = _smul(c1, c2)
                        acc[j] = _ssub(acc[j], p) if j in acc else -p
            acc = {j: c for j, c in ((j, normalize_scalar(c)) for j, c in acc.items())
                   if not scalar_is_zero(c)}
            if not acc:
                continue
            nume = _slice_to_expr(acc, u)
            q, r = sp.div(nume, two_r0, u)
            if sp.expand(sp.cancel(r)) != 0:
                raise ValueError(f"sqrt does not stay polynomial at t^{e}")
            sl = _expr_to_slice(sp.expand(q), u)
            if sl:
                out[e] = sl
        return BivariateSeries(out, order, laurent=self.laurent)

    # -- substitution and deflation ---------------------------------------
    def u_powers_of(self, U, max_deg):
        """[U^0, U^1, ..., U^max_deg] as PuiseuxSeries."""
        pows = [PuiseuxSeries.const(1, order=U.order)]
        for _ in range(max_deg):
            pows.append(pows[-1] * U)
        return pows

    def substitute_u(self, U, *, powers=None):
        """Phi(t, U) as a PuiseuxSeries; requires val(U) >= 0."""
        Uv = U._val_or_order()
        if Uv < 0:
            raise ValueError("substitution requires U finite at t=0")
        deg = self.u_degree()
        if deg is None:
            return PuiseuxSeries.zero(min(self.order, U.order))
        if any(min(sl) < 0 for sl in self.coeffs.values()):
            raise ValueError("substitution into Laurent slices not supported")
        if powers is None:
            powers = self.u_powers_of(U, deg)
        order = min(self.order, U.order)
        acc = {}
        for e, sl in self.coeffs.items():
            for j, c in sl.items():
                for eu, cu in powers[j].coeffs.items():
                    ee = e + eu
                    if ee >= order:
                        continue
                    p = _smul(c, cu)
                    acc[ee] = _sadd(acc[ee], p) if ee in acc else p
        return PuiseuxSeries(acc, order)

    def deflate(self, U, *, powers=None):
        """Psi with Phi = (u - U) * Psi + Phi(t, U) (divided difference)."""
        deg = self.u_degree()
        if deg is None:
            return BivariateSeries.zero(min(self.order, U.order), laurent=self.laurent)
        if powers is None:
            powers = self.u_powers_of(U, deg)
        order = min(self.order, U.order)
        out = {}
        for e, sl in self.coeffs.items():
            for j, c in sl.items():
                # (u^j - U^j)/(u - U) = sum_{a=0}^{j-1} u^a U^{j-1-a}
                for a in range(j):
                    for eu, cu in powers[j - 1 - a].coeffs.items():
                        ee = e + eu
                        if ee >= order:
                            continue
                        dst = out.setdefault(ee, {})
                        p = _smul(c, cu)
                        dst[a] = _sadd(dst[a], p) if a in dst else p
        return BivariateSeries(out, order, laurent=self.laurent)

    def eval_u(self, a):
        """Evaluate each slice at the scalar point u=a."""
        a = to_scalar(a)
        acc = {}
        for e, sl in self.coeffs.items():
            s = Fraction(0)
            for j, c in sl.items():
                if j < 0:
                    raise ValueError("evaluation of Laurent slices not supported")
                s = _sadd(s, _smul(c, a ** j))
            acc[e] = s
        return PuiseuxSeries(acc, self.order)

    def shift_u_by(self, alpha):
        """Phi(t, u + alpha) (binomial re-expansion of every slice)."""
        alpha = to_scalar(alpha)
        if scalar_is_zero(alpha):
            return self
        u = sp.Symbol("_ushift")
        out = {}
        for e, sl in self.coeffs.items():
            expr = _slice_to_expr(sl, u)
            shifted = sp.expand(expr.subs(u, u + as_sympy(alpha)))
            nsl = _expr_to_slice(shifted, u)
            if nsl:
                out[e] = nsl
        return BivariateSeries(out, self.order, laurent=self.laurent)

    # -- rendering ---------------------------------------------------------
    def text(self, uname="u"):
        if not self.coeffs:
            return f"0 + O(t^{_ordtext(self.order)})"
        u = sp.Symbol(uname)
        parts = []
        for e in sorted(self.coeffs):
            expr = _slice_to_expr(self.coeffs[e], u)
            parts.append(f"({expr}) * t^{_ordtext(e)}" if e != 0 else f"({expr})")
        return " + ".join(parts) + f" + O(t^{_ordtext(self.order)})"

    def __repr__(self):
        return f"BivariateSeries({self.text()})"


def _slice_to_expr(sl, u):
    out = sp.Integer(0)
    for j, c in sl.items():
        out += as_sympy(c) * u ** j
    return out


def _expr_to_slice(expr, u):
    expr = sp.expand(expr)
    if expr == 0:
        return {}
    p = sp.Poly(expr, u)
    return {m[0]: c for m, c in zip(p.monoms(), p.coeffs()) if c != 0}
