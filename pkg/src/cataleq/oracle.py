"""Independent cross-checks for the catalytic solver.

The walk counter is a direct dynamic program over (length, height) and
shares no code with the series engine, so agreement between the two is
meaningful evidence.  The other oracles are closed-form counts and exact
real-root isolation for growth constants.
"""

import math
from fractions import Fraction

import sympy as sp

from .algebra import real_root_isolate


class WalkModel:
    """Walks on the nonnegative integers, starting at 0, with a fixed
    set of allowed (nonzero integer) steps."""

    def __init__(self, steps):
        steps = [int(s) for s in steps]
        if not steps:
            raise ValueError("a walk model needs at least one step")
        if any(s == 0 for s in steps):
            raise ValueError("steps must be nonzero")
        if len(set(steps)) != len(steps):
            raise ValueError("steps must be distinct")
        self.steps = tuple(sorted(steps))

    def __repr__(self):
        return f"WalkModel(steps={list(self.steps)})"


def walk_profile(model, n):
    """{endpoint: count} for all n-step walks that stay >= 0."""
    if n < 0:
        raise ValueError("length must be nonnegative")
    counts = {0: 1}
    for _ in range(n):
        nxt = {}
        for h, c in counts.items():
            for s in model.steps:
                h2 = h + s
                if h2 >= 0:
                    nxt[h2] = nxt.get(h2, 0) + c
        counts = nxt
    return counts


def walk_count(model, n, e):
    """Number of n-step walks from 0 to e staying nonnegative."""
    if e < 0:
        return 0
    return walk_profile(model, n).get(e, 0)


def constellation_count(m, n):
    """Closed-form count of the degree-constrained bicolored maps with n
    black faces of degree m: (m+1) m^(n-1) / ([(m-1)n+2][(m-1)n+1]) * C(mn, n).
    """
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    value = Fraction((m + 1) * m ** (n - 1), ((m - 1) * n + 2) * ((m - 1) * n + 1))
    value *= math.comb(m * n, n)
    if value.denominator != 1:
        raise ArithmeticError("closed form did not evaluate to an integer")
    return value.numerator


def _eval(P, var, x):
    value = Fraction(0)
    for (e,), c in sp.Poly(P, var).terms():
        c = sp.Rational(c)
        value += Fraction(int(c.p), int(c.q)) * x ** int(e)
    return value


def smallest_positive_root(P, var=None, eps=Fraction(1, 1 << 20)):
    """Isolating interval (lo, hi) for the smallest positive real root;
    degenerate (r, r) when the root is rational.  The interval always
    brackets a sign change unless degenerate."""
    Pe = sp.sympify(P) if not hasattr(P, "free_symbols") else P
    if hasattr(Pe, "as_expr"):
        Pe = Pe.as_expr()
    if var is None:
        syms = list(Pe.free_symbols)
        if len(syms) != 1:
            raise ValueError("univariate polynomial required")
        var = syms[0]
    intervals = [iv for iv in real_root_isolate(Pe, var=var, eps=eps)
                 if iv[1] > 0]
    intervals = [iv for iv in intervals
                 if iv[0] > 0 or _eval(Pe, var, Fraction(0)) != 0 or iv[0] == iv[1]]
    positive = []
    for lo, hi in intervals:
        if lo == hi:
            if lo > 0:
                positive.append((lo, hi))
            continue
        # shrink away from 0 if the interval straddles it
        while lo < 0:
            mid = (lo + hi) / 2
            v = _eval(Pe, var, mid)
            if v == 0:
                lo = hi = mid
                break
            if v * _eval(Pe, var, hi) < 0:
                lo = mid
            else:
                hi = mid
        if hi > 0:
            positive.append((lo, hi))
    if not positive:
        raise ValueError("no positive real root")
    return min(positive)


def refine_interval(P, interval, var=None, width=Fraction(1, 1 << 30)):
    """Bisect a sign-change bracket down to the requested width."""
    Pe = sp.sympify(P) if not hasattr(P, "free_symbols") else P
    if hasattr(Pe, "as_expr"):
        Pe = Pe.as_expr()
    if var is None:
        var = list(Pe.free_symbols)[0]
    lo, hi = interval
    if lo == hi:
        return lo, hi
    flo = _eval(Pe, var, lo)
    if flo == 0:
        return lo, lo
    while hi - lo > width:
        mid = (lo + hi) / 2
        v = _eval(Pe, var, mid)
        if v == 0:
            return mid, mid
        if v * flo < 0:
            hi = mid
        else:
            lo, flo = mid, v
    return lo, hi


def growth_constant(P, var=None, width=Fraction(1, 1 << 20)):
    """Interval for 1/rho, where rho is the smallest positive real root of
    the minimal polynomial (or discriminant) P.  Exact when rho is rational."""
    lo, hi = smallest_positive_root(P, var=var)
    lo, hi = refine_interval(P, (lo, hi), var=var,
                             width=width * lo * lo if lo > 0 else width)
    if lo == hi:
        return Fraction(1) / lo, Fraction(1) / hi
    return Fraction(1) / hi, Fraction(1) / lo
