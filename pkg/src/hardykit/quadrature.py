"""Adaptive composite Simpson quadrature with a tracked error bound.

Operates on plain mpmath floats at the ambient working precision.  The
returned error is the usual Richardson estimate ``|S2 - S1| / 15`` summed
over accepted panels; callers that need a certificate record it alongside
the value.
"""

from __future__ import annotations

import mpmath as mp
from mpmath import mpf

__all__ = ["integrate", "integrate_cumulative", "QuadratureError"]


class QuadratureError(ArithmeticError):
    """Requested tolerance could not be met within the depth budget."""


def _simpson(fa, fm, fb, h):
    return (h / 6) * (fa + 4 * fm + fb)


def integrate(f, a, b, tol=None, max_depth=48):
    """Integrate f over [a, b]; returns (value, error_bound).

    `tol` is an absolute tolerance for the whole interval; default is
    2^(16 - prec) * (b - a), i.e. near full working precision.
    """
    a = mpf(a)
    b = mpf(b)
    if a == b:
        return mpf(0), mpf(0)
    if b < a:
        v, e = integrate(f, b, a, tol=tol, max_depth=max_depth)
        return -v, e
    if tol is None:
        tol = mpf(2) ** (-(mp.mp.prec // 2)) * max(b - a, mpf(1))
    fa, fb = f(a), f(b)
    m = (a + b) / 2
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)
    value, err = _adapt(f, a, b, fa, fm, fb, whole, mpf(tol), max_depth)
    return value, err


def _adapt(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if abs(delta) <= 15 * tol or depth <= 0:
        if depth <= 0 and abs(delta) > 15 * tol:
            raise QuadratureError("tolerance %s not reached on [%s, %s]" % (tol, a, b))
        return left + right + delta / 15, abs(delta) / 15
    lv, le = _adapt(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
    rv, re = _adapt(f, m, b, fm, frm, fb, right, tol / 2, depth - 1)
    return lv + rv, le + re


def integrate_cumulative(f, knots, tol=None, max_depth=48):
    """Prefix integrals of f along increasing knots.

    Returns (values, error_bound) where values[i] = integral from knots[0]
    to knots[i]; error_bound is the summed panel bound.
    """
    if len(knots) < 1:
        raise ValueError("need at least one knot")
    n = len(knots) - 1
    if tol is None:
        tol = mpf(2) ** (-(mp.mp.prec // 2)) * max(mpf(knots[-1]) - mpf(knots[0]), mpf(1))
    out = [mpf(0)]
    total = mpf(0)
    err = mpf(0)
    for i in range(n):
        v, e = integrate(f, knots[i], knots[i + 1], tol=tol / max(n, 1), max_depth=max_depth)
        total += v
        err += e
        out.append(total)
    return out, err
