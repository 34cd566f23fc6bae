"""Differential polynomials for powers of a rescaled derivation.

For delta = f * d/dt acting on a differential ring, delta^k expands as
sum_{j=1}^k G^k_j(f) d^j with G^k_j in Q{Y} given by the recursion

    G^k_0 = 0,    G^k_k = Y^k,    G^{k+1}_j = Y (d(G^k_j) + G^k_{j-1}).

Each G^k_j is homogeneous of degree k, so G^k_j(f) = f^k R^k_j(f'/f) for a
differential polynomial R^k_j of order < k; with delta = phi^{-1} d/dt this
yields  delta^k g = phi^{-k} sum_j R^k_j(-phi'/phi) g^(j).
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from .evaluate import eval_interval_raw
from .expr import Const, Div, GermExpr, Mul, Neg, diff
from .numeric import mpf_from_fraction, workprec

__all__ = ["DiffPoly", "delta_tables", "DEFAULT_TABLE_BUDGET", "delta_derive",
           "log_derivative_expr"]

DEFAULT_TABLE_BUDGET = 8


class DiffPoly:
    """Differential polynomial in one indeterminate with formal derivatives.

    Monomial keys are exponent tuples (i_0, i_1, ...) over Y, Y', Y'', ...
    with trailing zeros trimmed; coefficients are exact rationals.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[_trim(mono)] = c

    @staticmethod
    def zero():
        return DiffPoly()

    @staticmethod
    def constant(c):
        return DiffPoly({(): Fraction(c)})

    @staticmethod
    def indeterminate(order=0, power=1):
        mono = [0] * (order + 1)
        mono[order] = power
        return DiffPoly({tuple(mono): Fraction(1)})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, DiffPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return DiffPoly(out)

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return DiffPoly(out)

    def derivative(self):
        """Formal derivation: Y^(j) -> Y^(j+1) with the product rule."""
        out = {}
        for mono, c in self.terms.items():
            for j, e in enumerate(mono):
                if not e:
                    continue
                new = list(mono)
                new[j] -= 1
                if j + 1 >= len(new):
                    new.extend([0] * (j + 2 - len(new)))
                new[j + 1] += 1
                key = _trim(tuple(new))
                out[key] = out.get(key, Fraction(0)) + c * e
        return DiffPoly(out)

    def order(self):
        worst = -1
        for mono in self.terms:
            for j, e in enumerate(mono):
                if e:
                    worst = max(worst, j)
        return worst

    def degree(self):
        return max((sum(m) for m in self.terms), default=0)

    def evaluate(self, jet):
        """Numeric value given jet = (y, y', y'', ...) of mpf values."""
        total = mpf(0)
        for mono, c in self.terms.items():
            prod = mpf_from_fraction(c)
            for j, e in enumerate(mono):
                if e:
                    prod *= jet[j] ** e
            total += prod
        return total

    def at_constant_one(self):
        """Exact value with Y = 1 and all derivatives 0."""
        total = Fraction(0)
        for mono, c in self.terms.items():
            if all(e == 0 for e in mono[1:]):
                total += c
        return total

    def constant_term(self):
        return self.terms.get((), Fraction(0))

    def __repr__(self):
        if not self.terms:
            return "DiffPoly(0)"
        bits = []
        for mono, c in sorted(self.terms.items()):
            factors = [] if c != 1 or not any(mono) else []
            if c != 1 or not any(mono):
                factors.append(str(c))
            for j, e in enumerate(mono):
                name = "Y" + "'" * j
                factors.append(name if e == 1 else "%s^%d" % (name, e))
            bits.append("*".join(factors))
        return "DiffPoly(%s)" % " + ".join(bits)


def _trim(mono):
    mono = tuple(mono)
    while mono and mono[-1] == 0:
        mono = mono[:-1]
    return mono


def _mono_mul(m1, m2):
    n = max(len(m1), len(m2))
    return _trim(tuple((m1[i] if i < len(m1) else 0) + (m2[i] if i < len(m2) else 0)
                       for i in range(n)))


_TABLE_CACHE = {}


def delta_tables(k_max, budget=DEFAULT_TABLE_BUDGET):
    """G and R tables up to k_max: returns (G, R) with G[k][j], R[k][j].

    R^k_j is expressed in the indeterminate Z = f'/f via the jet expansion
    f^(m) = f * P_m(Z), P_0 = 1, P_{m+1} = Z P_m + d(P_m).
    """
    if k_max < 1:
        raise ValueError("table depth must be >= 1")
    if k_max > budget:
        raise ValueError("table depth %d exceeds the budget %d" % (k_max, budget))
    if k_max in _TABLE_CACHE:
        return _TABLE_CACHE[k_max]
    Y = DiffPoly.indeterminate(0)
    G = {1: {0: DiffPoly.zero(), 1: Y}}
    for k in range(1, k_max):
        nxt = {0: DiffPoly.zero()}
        for j in range(1, k + 1):
            nxt[j] = Y * (G[k][j].derivative() + G[k][j - 1])
        nxt[k + 1] = _y_power(k + 1)
        G[k + 1] = nxt
    # P_m with f^(m) = f * P_m(f'/f)
    P = [DiffPoly.constant(1)]
    Z = DiffPoly.indeterminate(0)
    for _ in range(k_max):
        P.append(Z * P[-1] + P[-1].derivative())
    R = {}
    for k in range(1, k_max + 1):
        R[k] = {}
        for j in range(1, k + 1):
            acc = DiffPoly.zero()
            for mono, c in G[k][j].terms.items():
                prod = DiffPoly.constant(c)
                for m, e in enumerate(mono):
                    for _ in range(e):
                        prod = prod * P[m]
                acc = acc + prod
            R[k][j] = acc
    _TABLE_CACHE[k_max] = (G, R)
    return G, R


def _y_power(k):
    return DiffPoly({(k,): Fraction(1)})


def log_derivative_expr(phi):
    """phi'/phi as an expression."""
    return Div(diff(phi), phi)


def delta_derive(g, phi, k, precision_bits=96, budget=DEFAULT_TABLE_BUDGET):
    """Grid of (phi^{-1} d/dt)^k g via the R-table.

    `g` is a GridFunction carrying derivative columns up to order k; `phi`
    is a positive expression on the grid span.  Returns a GridFunction with
    meta recording the route.
    """
    from .gridfn import GridFunction

    if k < 1:
        raise ValueError("delta power must be >= 1")
    for j in range(1, k + 1):
        if j not in g.derivatives:
            raise ValueError("derivative column %d missing" % j)
    _, R = delta_tables(k, budget)
    prec = precision_bits + 16
    with workprec(prec):
        z = Neg(log_derivative_expr(phi))       # Z = -phi'/phi
        z_jets = [z]
        for _ in range(max(0, k - 2)):
            z_jets.append(diff(z_jets[-1]))
        out = []
        for idx, t in enumerate(g.grid):
            lo, hi = eval_interval_raw(phi, t, prec)
            phi_v = (lo.to_mpf() + hi.to_mpf()) / 2
            if phi_v == 0:
                raise ZeroDivisionError("phi vanishes at %s" % t)
            jet = []
            for zj in z_jets:
                lo, hi = eval_interval_raw(zj, t, prec)
                jet.append((lo.to_mpf() + hi.to_mpf()) / 2)
            total = mpf(0)
            for j in range(1, k + 1):
                gj = g.derivatives[j][idx].to_mpf()
                total += R[k][j].evaluate(jet) * gj
            out.append(total / phi_v ** k)
        return GridFunction(g.grid, out, None, {
            "tag": "delta_derive",
            "k": k,
            "phi": repr(phi),
            "route": "R-table",
        })
