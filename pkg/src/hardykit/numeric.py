"""Log-depth encoded high-precision reals.

A magnitude is stored as ``exp_d(r)`` (``d`` iterations of exp applied to an
mpmath float ``r``), so that tower-sized quantities like ``exp(exp(exp(50)))``
stay comparable long after any fixed-precision float has overflowed.  The
canonical form keeps the mantissa in a fixed band:

* ``depth == 0``: plain value, ``0 < mant < LIFT``;
* ``depth >= 1``: ``LOG_LIFT <= mant < LIFT``, magnitude ``exp_depth(mant)``;
* ``depth <= -1``: reciprocal form for magnitudes too small for a plain
  float exponent, magnitude ``1 / exp_{-depth}(mant)``.

exp and log are exact depth shifts away from the plain band, which is what
makes arithmetic on these values cheap: only the final plain-band step calls
into mpmath.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from mpmath import mpf


LIFT = 1024                  # plain band is [0, LIFT); mantissa band [log LIFT, LIFT)
_EXP_CAP_BITS = 1 << 16      # cap on the bit-length of a plain binary exponent

__all__ = [
    "LIFT",
    "TowerOverflowError",
    "TowerValue",
    "TV",
    "tv_exp",
    "tv_log",
    "exp_tower",
    "workprec",
    "mpf_from_fraction",
]

workprec = mp.workprec


class TowerOverflowError(ArithmeticError):
    """Value left the tower-representable range (mantissa precision infeasible)."""


def mpf_from_fraction(q):
    """Exact conversion of ints/Fractions; mpf/float pass through rounded."""
    if isinstance(q, Fraction):
        return mpf(q.numerator) / mpf(q.denominator)
    return mpf(q)


def fraction_from_mpf(x):
    """Exact rational value of a finite mpf."""
    x = mpf(x)
    sign, man, exp, _ = x._mpf_
    if man == 0 and exp != 0:
        raise ValueError("mpf %r is not finite" % x)
    val = Fraction(man) * (Fraction(2) ** exp)
    return -val if sign else val


def _log_lift():
    return mp.log(mpf(LIFT))


class TowerValue:
    """Immutable signed real in log-depth canonical form."""

    __slots__ = ("sign", "depth", "mant")

    def __init__(self, sign, depth, mant):
        self.sign = sign
        self.depth = depth
        self.mant = mant

    # -- construction -------------------------------------------------

    @staticmethod
    def zero():
        return TowerValue(0, 0, mpf(0))

    @staticmethod
    def one():
        return TowerValue(1, 0, mpf(1))

    @staticmethod
    def from_mpf(x):
        x = mpf(x)
        if x == 0:
            return TowerValue.zero()
        s = 1 if x > 0 else -1
        return _canon_plain(s, abs(x))

    @staticmethod
    def from_number(q):
        return TowerValue.from_mpf(mpf_from_fraction(q))

    # -- predicates ----------------------------------------------------

    def is_zero(self):
        return self.sign == 0

    def magnitude(self):
        return TowerValue(1, self.depth, self.mant) if self.sign else TowerValue.zero()

    # -- conversion ----------------------------------------------------

    def to_mpf(self):
        """Plain mpf, or TowerOverflowError when the exponent is not representable."""
        if self.sign == 0:
            return mpf(0)
        if self.depth == 0:
            return self.sign * self.mant
        m = self.mant
        for _ in range(abs(self.depth)):
            # exp(m) carries a binary exponent of ~m/log 2; cap its bit size
            if m > 0 and mp.mag(m) > _EXP_CAP_BITS:
                raise TowerOverflowError("magnitude exceeds plain exponent range")
            m = mp.exp(m)
        if self.depth < 0:
            m = 1 / m
        return self.sign * m

    def __float__(self):
        try:
            return float(self.to_mpf())
        except TowerOverflowError:
            return mp.inf * self.sign

    def __repr__(self):
        if self.sign == 0:
            return "TowerValue(0)"
        s = "-" if self.sign < 0 else ""
        if self.depth == 0:
            return "TowerValue(%s%s)" % (s, mp.nstr(self.mant, 12))
        return "TowerValue(%sexp_%d(%s))" % (s, self.depth, mp.nstr(self.mant, 12))

    # -- total order ---------------------------------------------------

    def cmp(self, other):
        if self.sign != other.sign:
            return -1 if self.sign < other.sign else 1
        if self.sign == 0:
            return 0
        c = _mag_cmp(self, other)
        return c if self.sign > 0 else -c

    def __eq__(self, other):
        return isinstance(other, TowerValue) and self.cmp(other) == 0

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def __hash__(self):
        return hash((self.sign, self.depth, self.mant))

    # -- arithmetic ----------------------------------------------------

    def __neg__(self):
        return TowerValue(-self.sign, self.depth, self.mant)

    def __abs__(self):
        return self.magnitude()

    def __add__(self, other):
        return _add(self, other)

    def __sub__(self, other):
        return _add(self, -other)

    def __mul__(self, other):
        return _mul(self, other)

    def __truediv__(self, other):
        return _mul(self, other.inv())

    def inv(self):
        if self.sign == 0:
            raise ZeroDivisionError("tower value inverse of zero")
        if self.depth == 0:
            return _canon_plain(self.sign, 1 / self.mant)
        return TowerValue(self.sign, -self.depth, self.mant)

    def scale(self, q):
        """Multiply by an exact rational/int/mpf scalar."""
        q = mpf_from_fraction(q)
        if q == 0 or self.sign == 0:
            return TowerValue.zero()
        s = self.sign * (1 if q > 0 else -1)
        if self.depth == 0:
            return _canon_plain(s, self.mant * abs(q))
        lg = tv_log(self.magnitude()) + TowerValue.from_mpf(mp.log(abs(q)))
        out = tv_exp(lg)
        return TowerValue(s, out.depth, out.mant)

    def pow_q(self, q):
        """Rational power; base must be positive unless q is an integer."""
        if isinstance(q, int):
            q = Fraction(q)
        if self.sign == 0:
            if q > 0:
                return TowerValue.zero()
            raise ZeroDivisionError("0 to a nonpositive power")
        if self.sign < 0:
            if q.denominator != 1:
                raise ValueError("fractional power of a negative value")
            s = -1 if (q.numerator % 2) else 1
            mag = self.magnitude().pow_q(q)
            return TowerValue(s, mag.depth, mag.mant)
        if q == 0:
            return TowerValue.one()
        return tv_exp(tv_log(self).scale(q))


def TV(q):
    """Shorthand constructor from int/Fraction/float/mpf."""
    if isinstance(q, TowerValue):
        return q
    return TowerValue.from_number(q)


# -- canonicalization ----------------------------------------------------


def _canon_plain(sign, m):
    """Canonical TowerValue for a positive plain mpf magnitude m.

    Band partition: (0, 1/LIFT] reciprocal ladder, (1/LIFT, LIFT) plain,
    [LIFT, oo) exp ladder.  The partition keeps magnitude comparison a
    class-then-mantissa lookup.
    """
    if m == 0:
        return TowerValue.zero()
    if mp.isinf(m) or mp.isnan(m):
        raise TowerOverflowError("non-finite magnitude")
    if m * LIFT <= 1:
        w = -mp.log(m)
        d = 1
        while w >= LIFT:
            w = mp.log(w)
            d += 1
        return TowerValue(sign, -d, w)
    depth = 0
    while m >= LIFT:
        m = mp.log(m)
        depth += 1
    return TowerValue(sign, depth, m)


def _canon_deep(sign, depth, m):
    """Canonicalize exp_depth(m) (depth >= 1) whose mantissa may be off-band."""
    while m >= LIFT:
        m = mp.log(m)
        depth += 1
    while depth > 0 and m < _log_lift():
        m = mp.exp(m)
        depth -= 1
    if depth == 0:
        return _canon_plain(sign, m)
    return TowerValue(sign, depth, m)


# -- exp / log -------------------------------------------------------------


def tv_exp(x):
    """exp of a TowerValue, as a TowerValue."""
    if x.sign == 0:
        return TowerValue.one()
    if x.sign < 0:
        return tv_exp(-x).inv()
    if x.depth < 0:
        try:
            return _canon_plain(1, mp.exp(x.to_mpf()))
        except TowerOverflowError:
            # 1 + (below any representable correction)
            return TowerValue.one()
    if x.depth >= 1:
        return TowerValue(1, x.depth + 1, x.mant)
    if x.mant >= _log_lift():
        return _canon_deep(1, 1, x.mant)
    return _canon_plain(1, mp.exp(x.mant))


def tv_log(x):
    """log of a positive TowerValue, as a TowerValue."""
    if x.sign <= 0:
        raise ValueError("log of a nonpositive tower value")
    if x.depth >= 1:
        if x.depth == 1:
            return _canon_plain(1, x.mant)
        return TowerValue(1, x.depth - 1, x.mant)
    if x.depth <= -1:
        if x.depth == -1:
            return -_canon_plain(1, x.mant)
        return TowerValue(-1, -x.depth - 1, x.mant)
    return TowerValue.from_mpf(mp.log(x.mant))


def exp_tower(n, x):
    """exp_n(x) for a TowerValue (or number) x."""
    v = TV(x)
    for _ in range(n):
        v = tv_exp(v)
    return v


# -- comparison of magnitudes ----------------------------------------------


def _mag_cmp(a, b):
    """Compare |a| vs |b| for nonzero values.

    Canonical classes are ordered: reciprocal forms (depth <= -1) sit below
    the plain band (depth 0), which sits below the exp ladder (depth >= 1).
    """
    da, db = a.depth, b.depth
    ca = 0 if da == 0 else (1 if da > 0 else -1)
    cb = 0 if db == 0 else (1 if db > 0 else -1)
    if ca != cb:
        return -1 if ca < cb else 1
    if ca == 0:
        if a.mant == b.mant:
            return 0
        return -1 if a.mant < b.mant else 1
    if da != db:
        # deeper exp is bigger; deeper reciprocal is smaller
        return -1 if da < db else 1
    if a.mant == b.mant:
        return 0
    if da >= 1:
        return -1 if a.mant < b.mant else 1
    return 1 if a.mant < b.mant else -1


# -- add / mul ---------------------------------------------------------------


def _mul(a, b):
    s = a.sign * b.sign
    if s == 0:
        return TowerValue.zero()
    if a.depth == 0 and b.depth == 0:
        return _canon_plain(s, a.mant * b.mant)
    if abs(a.depth) <= 2 and abs(b.depth) <= 2:
        # shallow ladders usually fit a plain float; much cheaper than logs
        try:
            return _canon_plain(s, abs(a.to_mpf()) * abs(b.to_mpf()))
        except TowerOverflowError:
            pass
    lg = tv_log(a.magnitude()) + tv_log(b.magnitude())
    out = tv_exp(lg)
    return TowerValue(s, out.depth, out.mant)


def _add(a, b):
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    if a.depth == 0 and b.depth == 0:
        return TowerValue.from_mpf(a.sign * a.mant + b.sign * b.mant)
    if abs(a.depth) <= 2 and abs(b.depth) <= 2:
        try:
            return TowerValue.from_mpf(a.to_mpf() + b.to_mpf())
        except TowerOverflowError:
            pass
    # order by magnitude
    if _mag_cmp(a, b) < 0:
        a, b = b, a
    ratio = (b.magnitude() / a.magnitude())
    try:
        r = ratio.to_mpf()
    except TowerOverflowError:
        r = mpf(0)
    if r > 1:  # rounding artifact; |b| <= |a| by construction
        r = mpf(1)
    if a.sign == b.sign:
        corr = mp.log1p(r)
    else:
        if r == 1:
            return TowerValue.zero()
        corr = mp.log1p(-r)
    lg = tv_log(a.magnitude()) + TowerValue.from_mpf(corr)
    out = tv_exp(lg)
    return TowerValue(a.sign, out.depth, out.mant)
