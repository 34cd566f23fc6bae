"""Certified evaluation intervals over log-depth reals."""

from __future__ import annotations

from mpmath import mpf

from .numeric import TV

__all__ = ["EvalInterval"]


class EvalInterval:
    """Closed interval [lower, upper] guaranteed to contain the true value."""

    __slots__ = ("lower", "upper", "precision_bits")

    def __init__(self, lower, upper, precision_bits):
        if lower.cmp(upper) > 0:
            raise ValueError("interval endpoints out of order")
        self.lower = lower
        self.upper = upper
        self.precision_bits = precision_bits

    @staticmethod
    def exact(value, precision_bits=0):
        v = TV(value)
        return EvalInterval(v, v, precision_bits)

    @staticmethod
    def from_mpf_pm(value, err, precision_bits=0):
        """Interval value +/- err from plain mpfs."""
        err = abs(mpf(err))
        return EvalInterval(TV(mpf(value) - err), TV(mpf(value) + err), precision_bits)

    # -- queries -----------------------------------------------------------

    def contains(self, v):
        v = TV(v)
        return self.lower.cmp(v) <= 0 and v.cmp(self.upper) <= 0

    def encloses(self, other):
        return self.lower.cmp(other.lower) <= 0 and other.upper.cmp(self.upper) <= 0

    def strictly_below(self, other):
        return self.upper.cmp(other.lower) < 0

    def strictly_positive(self):
        return self.lower.sign > 0

    def strictly_negative(self):
        return self.upper.sign < 0

    def sign_known(self):
        return self.strictly_positive() or self.strictly_negative() or (
            self.lower.sign == 0 and self.upper.sign == 0
        )

    def midpoint_mpf(self):
        return (self.lower.to_mpf() + self.upper.to_mpf()) / 2

    def rel_width_mpf(self):
        """(upper - lower) / max(1, |midpoint|) as a plain mpf; may overflow."""
        lo, hi = self.lower.to_mpf(), self.upper.to_mpf()
        scale = max(mpf(1), abs(lo + hi) / 2)
        return (hi - lo) / scale

    def __repr__(self):
        return "EvalInterval(%r, %r)" % (self.lower, self.upper)
