"""The compactly supported mollifier and the unit bump built from it.

The mollifier is

    rho(t) = exp(-1/(1+t)^2 - 1/(1-t)^2)   for -1 < t < 1,   0 otherwise,

an even C-infinity function with rho(0) = e^-2.  The bump

    alpha(t) = (1/c) * integral_{-oo}^t rho(2s - 1) ds,
    c = integral rho(2s - 1) ds,

is 0 on (-oo, 0], strictly increasing on [0, 1], and 1 on [1, +oo).  Every
derivative of rho is a rational function times rho; the numerator
polynomials follow the recurrence implemented in ``_rho_numerators`` (kept
over exact integers), so derivative evaluation needs no quadrature.

Derivative-bound constants C_m satisfy 1 <= C_0 <= C_1 <= ... with
|alpha^(m)| <= C_m everywhere, hence for the rescaled bump
alpha_{a,b}(t) = alpha((t-a)/(b-a)) the bound |alpha_{a,b}^(m)| <=
C_m/(b-a)^m.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from . import quadrature
from .intervals import EvalInterval
from .numeric import mpf_from_fraction, workprec

__all__ = [
    "MAX_DERIVATIVE_ORDER",
    "rho",
    "rho_derivative",
    "eval_mollifier",
    "bump",
    "bump_derivative",
    "eval_bump",
    "BumpBounds",
    "bump_bounds",
    "mollifier_mass",
]

MAX_DERIVATIVE_ORDER = 6

# numerator polynomials of rho^(n)/rho, dense integer coefficient lists
# (lowest degree first); denominator is (1 - t^2)^(3n)
_NUMERATORS = None


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _poly_add(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _poly_diff(p):
    return [i * c for i, c in enumerate(p)][1:] or [0]


def _rho_numerators():
    """N_0..N_max with rho^(n) = N_n(t) / (1-t^2)^(3n) * rho(t)."""
    global _NUMERATORS
    if _NUMERATORS is not None:
        return _NUMERATORS
    one_mt2 = [1, 0, -1]                     # 1 - t^2
    one_mt2_sq = _poly_mul(one_mt2, one_mt2)
    gprime_num = [0, -12, 0, -4]             # -4t(3 + t^2)
    nums = [[1]]
    for n in range(MAX_DERIVATIVE_ORDER + 2):
        N = nums[-1]
        term1 = _poly_mul(_poly_add(_poly_mul(_poly_diff(N), one_mt2),
                                    _poly_mul([0, 6 * n], N)),
                          one_mt2_sq)
        term2 = _poly_mul(gprime_num, N)
        nums.append(_poly_add(term1, term2))
    _NUMERATORS = nums
    return nums


def _poly_eval(coeffs, t):
    acc = mpf(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def rho(t):
    """Mollifier value at a plain mpf/number t."""
    t = mpf_from_fraction(t)
    if t <= -1 or t >= 1:
        return mpf(0)
    return mp.exp(-1 / (1 + t) ** 2 - 1 / (1 - t) ** 2)


def rho_derivative(t, order):
    """order-th derivative of the mollifier at t (order <= MAX_DERIVATIVE_ORDER)."""
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise ValueError("derivative order %d out of budget (max %d)"
                         % (order, MAX_DERIVATIVE_ORDER))
    t = mpf_from_fraction(t)
    if t <= -1 or t >= 1:
        return mpf(0)
    if order == 0:
        return rho(t)
    N = _rho_numerators()[order]
    return _poly_eval(N, t) / (1 - t * t) ** (3 * order) * rho(t)


def eval_mollifier(t, order=0, precision_bits=64):
    """Certified interval for rho^(order)(t); exactly 0 outside (-1, 1)."""
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise ValueError("derivative order %d out of budget (max %d)"
                         % (order, MAX_DERIVATIVE_ORDER))
    tq = Fraction(t) if not isinstance(t, (float, mpf)) else t
    if not isinstance(tq, Fraction):
        tq = Fraction(mpf(tq))
    if tq <= -1 or tq >= 1:
        return EvalInterval.exact(0, precision_bits)
    with workprec(precision_bits + 32):
        v = rho_derivative(tq, order)
        slop = abs(v) * mpf(2) ** (-(precision_bits + 16)) + mpf(2) ** (-4 * (precision_bits + 16))
    return EvalInterval.from_mpf_pm(v, slop, precision_bits)


# -- bump ------------------------------------------------------------------

_PREFIX_CACHE = {}
_PREFIX_PANELS = 1 << 13


def _prefix_table():
    """Prefix integrals of rho at 2^13 uniform panels over [-1, 1] (cached).

    Composite Simpson per panel; the error bound is a Richardson comparison
    against the half-resolution rule (order h^4, so the uniform grid already
    sits far below 1e-18).
    """
    key = mp.mp.prec
    if key not in _PREFIX_CACHE:
        n = _PREFIX_PANELS
        h = mpf(2) / n
        samples = [rho(mpf(-1) + h / 2 * i) for i in range(2 * n + 1)]
        prefix = [mpf(0)] * (n + 1)
        acc = mpf(0)
        for i in range(n):
            acc += (h / 6) * (samples[2 * i] + 4 * samples[2 * i + 1] + samples[2 * i + 2])
            prefix[i + 1] = acc
        coarse = mpf(0)
        for i in range(0, n, 2):
            coarse += (h / 3) * (samples[2 * i] + 4 * samples[2 * i + 2] + samples[2 * i + 4])
        err = abs(prefix[n] - coarse) / 15 + mpf(2) ** (8 - mp.mp.prec)
        _PREFIX_CACHE[key] = (h, prefix, err)
    return _PREFIX_CACHE[key]


def mollifier_mass():
    """integral of rho over [-1, 1] at the ambient precision (cached)."""
    h, prefix, err = _prefix_table()
    return prefix[-1], err


def _rho_integral_upto(u):
    """integral of rho over [-1, u] for u in [-1, 1], via the panel cache."""
    h, prefix, base_err = _prefix_table()
    if u <= -1:
        return mpf(0), mpf(0)
    if u >= 1:
        return prefix[-1], base_err
    idx = int((u + 1) / h)
    idx = min(max(idx, 0), _PREFIX_PANELS - 1)
    lo = mpf(-1) + idx * h
    if u == lo:
        return prefix[idx], base_err
    v, e = quadrature.integrate(rho, lo, u, tol=mpf(2) ** (-60), max_depth=20)
    return prefix[idx] + v, base_err + e


def bump(t):
    """alpha(t) at the ambient precision; exact 0/1 off the ramp."""
    t = mpf_from_fraction(t)
    if t <= 0:
        return mpf(0)
    if t >= 1:
        return mpf(1)
    mass, _ = mollifier_mass()
    num, _ = _rho_integral_upto(2 * t - 1)
    return num / mass


def bump_derivative(t, order):
    """alpha^(order)(t) = 2^order * rho^(order-1)(2t - 1) / mass for order >= 1."""
    if order == 0:
        return bump(t)
    t = mpf_from_fraction(t)
    if t <= 0 or t >= 1:
        return mpf(0)
    mass, _ = mollifier_mass()
    return mpf(2) ** order * rho_derivative(2 * t - 1, order - 1) / mass


def eval_bump(a, b, t, order=0, precision_bits=64):
    """Certified interval for alpha_{a,b}^(order)(t).

    alpha_{a,b}(t) = alpha((t - a)/(b - a)); the order-th derivative picks up
    the factor (b - a)^-order.
    """
    a = Fraction(a)
    b = Fraction(b)
    if a >= b:
        raise ValueError("bump needs a < b")
    if order < 0 or order > MAX_DERIVATIVE_ORDER:
        raise ValueError("derivative order %d out of budget (max %d)"
                         % (order, MAX_DERIVATIVE_ORDER))
    u = (Fraction(t) - a) / (b - a)
    if order == 0:
        if u <= 0:
            return EvalInterval.exact(0, precision_bits)
        if u >= 1:
            return EvalInterval.exact(1, precision_bits)
    elif u <= 0 or u >= 1:
        return EvalInterval.exact(0, precision_bits)
    with workprec(precision_bits + 48):
        if order == 0:
            mass, em = mollifier_mass()
            num, en = _rho_integral_upto(mpf_from_fraction(2 * u - 1))
            v = num / mass
            slop = (en + em) / mass + abs(v) * mpf(2) ** (-(precision_bits + 24))
        else:
            v = bump_derivative(mpf_from_fraction(u), order)
            v = v / mpf_from_fraction(b - a) ** order
            slop = abs(v) * mpf(2) ** (-(precision_bits + 24)) + mpf(2) ** (-2 * precision_bits)
    return EvalInterval.from_mpf_pm(v, slop, precision_bits)


# -- derivative bound constants ---------------------------------------------


class BumpBounds:
    """Derivative bounds C_m for the unit bump, rescaled by (b-a)^-m."""

    def __init__(self, order, c_m, scale):
        self.order = order
        self.c_m = c_m
        self.scale = scale

    def bound(self):
        a, b = self.scale
        return self.c_m / mpf_from_fraction(Fraction(b) - Fraction(a)) ** self.order

    def __repr__(self):
        return "BumpBounds(order=%d, C=%s, scale=%r)" % (
            self.order, mp.nstr(self.c_m, 10), self.scale)


_CM_CACHE = {}


def _sup_abs_rho_derivative(order, samples=4096):
    """Upper bound for sup |rho^(order)| via dense sampling plus refinement."""
    best = mpf(0)
    arg = mpf(0)
    for i in range(samples + 1):
        t = mpf(-1) + mpf(2) * i / samples
        v = abs(rho_derivative(t, order))
        if v > best:
            best, arg = v, t
    # golden-section refinement around the best sample
    h = mpf(2) / samples
    lo, hi = max(arg - h, mpf(-1)), min(arg + h, mpf(1))
    for _ in range(200):
        m1 = lo + (hi - lo) * mpf("0.382")
        m2 = lo + (hi - lo) * mpf("0.618")
        if abs(rho_derivative(m1, order)) < abs(rho_derivative(m2, order)):
            lo = m1
        else:
            hi = m2
    best = max(best, abs(rho_derivative((lo + hi) / 2, order)))
    # safety margin: sampled maxima can undershoot the true sup
    return best * (1 + mpf(1) / 64)


def bump_bounds(max_order=MAX_DERIVATIVE_ORDER, scale=(0, 1)):
    """BumpBounds list for orders 0..max_order, with C_0 = 1 <= C_1 <= ...."""
    key = (mp.mp.prec, max_order)
    if key not in _CM_CACHE:
        mass, _ = mollifier_mass()
        cs = [mpf(1)]
        for m in range(1, max_order + 1):
            raw = mpf(2) ** m * _sup_abs_rho_derivative(m - 1) / mass
            cs.append(max(cs[-1], raw))
        _CM_CACHE[key] = cs
    cs = _CM_CACHE[key]
    return [BumpBounds(m, cs[m], scale) for m in range(max_order + 1)]
