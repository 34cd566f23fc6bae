"""Monomials over a declared chain of pairwise-dominating generators.

A scale chain lists generator germs g_1 >> g_2 >> ... >> g_k >> 1 (each
dominating the next), so products g_1^{r_1} ... g_k^{r_k} carry an exact
total order: compare exponent vectors lexicographically, most dominant
generator first.  The canonical tower chain

    ..., exp_2(x), exp(x), x, log(x), log_2(x), ...

gets exact dominance certificates for free; user chains are certified by
sampling.  Tower generators are indexed by ladder position: exp_k(x) at
+k, x at 0, log_k(x) at -k.
"""

from __future__ import annotations

from fractions import Fraction

from .compare import ComparePolicy, EventualCertificate, compare_eventually
from .expr import (Add, Const, Div, GermExpr, IterExp, IterLog, Mul, Pow, X,
                   to_text)

__all__ = [
    "ScaleChain", "Monomial", "canonical_chain", "monomial_compare",
    "log_derivative_mono", "exp_equivalent", "ChainError",
]


class ChainError(ValueError):
    pass


class ScaleChain:
    """Ordered generators with dominance certificates g_i >> g_{i+1} >> 1."""

    def __init__(self, generators, certificates):
        if not generators:
            raise ChainError("a scale chain needs at least one generator")
        self.generators = tuple(generators)
        self.certificates = tuple(certificates)
        for cert in self.certificates:
            if not cert.holds():
                raise ChainError("chain dominance certificate does not hold: %r"
                                 % (cert,))

    def __len__(self):
        return len(self.generators)

    def monomial(self, exponents):
        return Monomial(self, exponents)

    def identity(self):
        return Monomial(self, (0,) * len(self.generators))

    @staticmethod
    def certified(generators, policy=None):
        """Build a chain from expressions, certifying adjacent dominance."""
        policy = policy or ComparePolicy(horizon=Fraction(16), doublings=12,
                                         precision_bits=96)
        certs = []
        gens = list(generators)
        for a, b in zip(gens, gens[1:]):
            certs.append(compare_eventually(b, a, policy, "prec"))
        certs.append(compare_eventually(Const(1), gens[-1], policy, "prec"))
        return ScaleChain(gens, certs)


def tower_position(gen):
    """Ladder position of a canonical tower generator, or None."""
    if isinstance(gen, IterExp) and gen.arg == X:
        return gen.depth
    if gen == X:
        return 0
    if isinstance(gen, IterLog) and gen.arg == X:
        return -gen.depth
    return None


def _tower_generator(pos):
    if pos > 0:
        return IterExp(pos, X)
    if pos == 0:
        return X
    return IterLog(-pos, X)


class _TowerChain(ScaleChain):
    """Canonical chain e_d >> ... >> e_1 >> x >> l_1 >> ... >> l_m.

    Dominance among distinct tower generators is exact, so the certificates
    carry exact=True and no samples.
    """

    def __init__(self, exp_depth, log_depth):
        gens = [_tower_generator(p) for p in range(exp_depth, -log_depth - 1, -1)]
        certs = []
        for a, b in zip(gens, gens[1:]):
            certs.append(EventualCertificate(
                claim="prec", lhs=to_text(b), rhs=to_text(a),
                verdict="Holds", exact=True, samples=[],
                horizon=Fraction(1), note="tower generators are exactly ordered"))
        certs.append(EventualCertificate(
            claim="prec", lhs="1", rhs=to_text(gens[-1]),
            verdict="Holds", exact=True, samples=[], horizon=Fraction(1),
            note="every tower generator is unbounded"))
        super().__init__(gens, certs)
        self.exp_depth = exp_depth
        self.log_depth = log_depth


_TOWER_CACHE = {}


def canonical_chain(exp_depth=3, log_depth=2):
    key = (exp_depth, log_depth)
    if key not in _TOWER_CACHE:
        _TOWER_CACHE[key] = _TowerChain(exp_depth, log_depth)
    return _TOWER_CACHE[key]


class Monomial:
    """Exponent vector over a scale chain; the zero vector is the identity."""

    __slots__ = ("chain", "exponents")

    def __init__(self, chain, exponents):
        exponents = tuple(Fraction(e) for e in exponents)
        if len(exponents) != len(chain):
            raise ChainError("exponent vector length %d != chain length %d"
                             % (len(exponents), len(chain)))
        self.chain = chain
        self.exponents = exponents

    def __mul__(self, other):
        self._check(other)
        return Monomial(self.chain,
                        tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __truediv__(self, other):
        self._check(other)
        return Monomial(self.chain,
                        tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def pow(self, q):
        q = Fraction(q)
        return Monomial(self.chain, tuple(a * q for a in self.exponents))

    def inv(self):
        return Monomial(self.chain, tuple(-a for a in self.exponents))

    def is_identity(self):
        return all(e == 0 for e in self.exponents)

    def _check(self, other):
        if other.chain is not self.chain:
            raise ChainError("monomials come from different chains")

    def to_expr(self):
        """Product expression g_1^{r_1} * ... * g_k^{r_k}."""
        out = None
        for g, r in zip(self.chain.generators, self.exponents):
            if r == 0:
                continue
            factor = g if r == 1 else Pow(g, r)
            out = factor if out is None else Mul(out, factor)
        return out if out is not None else Const(1)

    def ladder_vector(self):
        """{ladder position: exponent}; requires canonical tower generators."""
        vec = {}
        for g, r in zip(self.chain.generators, self.exponents):
            if r == 0:
                continue
            pos = tower_position(g)
            if pos is None:
                raise ChainError("generator %s is not a tower element"
                                 % to_text(g))
            vec[pos] = vec.get(pos, Fraction(0)) + r
        return vec

    def __eq__(self, other):
        return (isinstance(other, Monomial) and self.chain is other.chain
                and self.exponents == other.exponents)

    def __hash__(self):
        return hash((id(self.chain), self.exponents))

    def __repr__(self):
        return "Monomial(%s)" % to_text(self.to_expr())


def monomial_compare(m1, m2):
    """Exact order: (-1|0|1, certificate); -1 means m1 << m2.

    Lexicographic on exponent vectors, most dominant generator first: m1 is
    dominated by m2 exactly when the first nonzero entry of
    exponents(m2) - exponents(m1) is positive.
    """
    m1._check(m2)
    result = 0
    for a, b in zip(m1.exponents, m2.exponents):
        if a != b:
            result = -1 if b - a > 0 else 1
            break
    if result == -1:
        claim, lhs, rhs = "prec", m1, m2
    elif result == 1:
        claim, lhs, rhs = "prec", m2, m1
    else:
        claim, lhs, rhs = "sim", m1, m2
    cert = EventualCertificate(
        claim=claim, lhs=repr(lhs), rhs=repr(rhs), verdict="Holds",
        exact=True, samples=[], horizon=Fraction(1),
        note="lexicographic exponent comparison on a certified chain")
    return result, cert


# -- logarithmic derivative on the canonical tower chain ---------------------


def _generator_log_derivative(gen):
    """g'/g for a canonical tower generator, as an expression."""
    pos = tower_position(gen)
    if pos is None:
        raise ChainError("unsupported generator %r for a symbolic "
                         "log-derivative" % to_text(gen))
    if pos > 0:
        # (exp_n)'/exp_n = exp_1 * ... * exp_{n-1}
        prod = None
        for j in range(1, pos):
            term = IterExp(j, X)
            prod = term if prod is None else Mul(prod, term)
        return prod if prod is not None else Const(1)
    if pos == 0:
        return Pow(X, Fraction(-1))
    # (log_n)'/log_n = 1 / (x * log(x) * ... * log_n(x))
    den = X
    for j in range(1, -pos + 1):
        den = Mul(den, IterLog(j, X))
    return Div(Const(1), den)


def log_derivative_mono(m):
    """Symbolic m'/m = sum r_i * g_i'/g_i over the canonical tower chain."""
    out = None
    for g, r in zip(m.chain.generators, m.exponents):
        if r == 0:
            continue
        part = _generator_log_derivative(g)
        if r != 1:
            part = Mul(Const(r), part)
        out = part if out is None else Add(out, part)
    return out if out is not None else Const(0)


# -- exponential equivalence --------------------------------------------------
#
# Decided exactly through ordered ladder sums: a finite sum of scaled
# products of tower generators, ordered by the dominance of its terms.
# m <= exp_n(g) holds once log_n(m) <= g, and each log step is exact:
# log(prod g_p^{r_p}) = sum r_p * (rung below p), while the log of a sum
# collapses onto its leading term up to a constant and an infinitesimal.


def _vec_cmp(v1, v2):
    """Dominance order of ladder product monomials (lexicographic)."""
    for p in sorted(set(v1) | set(v2), reverse=True):
        a = v1.get(p, Fraction(0))
        b = v2.get(p, Fraction(0))
        if a != b:
            return 1 if a > b else -1
    return 0


class _LadderSum:
    """terms: {frozen vec: coeff}; logconst c stands for the value log(c)."""

    def __init__(self, terms, logconst=Fraction(1), inexact=False):
        self.terms = {v: c for v, c in terms.items() if c != 0}
        self.logconst = logconst
        self.inexact = inexact  # an infinitesimal correction was dropped

    def leading(self):
        best = None
        for v in self.terms:
            if best is None or _vec_cmp(dict(v), dict(best)) > 0:
                best = v
        return best

    def tends_to_infinity(self):
        lead = self.leading()
        if lead is None:
            return False
        vec = dict(lead)
        top = max(vec)
        return vec[top] > 0 and self.terms[lead] > 0

    def log(self):
        """Exact-to-infinitesimal log; None when the sum is not -> +oo."""
        if not self.tends_to_infinity():
            return None
        lead = self.leading()
        coeff = self.terms[lead]
        rest = {v: c for v, c in self.terms.items() if v != lead}
        out = {}
        for p, r in dict(lead).items():
            rung = _unit_vec(p - 1)
            out[rung] = out.get(rung, Fraction(0)) + r
        dropped = bool(rest) or self.logconst != 1
        return _LadderSum(out, logconst=coeff,
                          inexact=self.inexact or dropped)


def _unit_vec(pos):
    return frozenset({(pos, Fraction(1))})


def _ladder_sum_of_monomial(m):
    vec = m.ladder_vector()
    if not vec:
        return _LadderSum({})
    return _LadderSum({frozenset(vec.items()): Fraction(1)})


def _sum_le(A, B):
    """Eventual A <= B, exact up to sub-constant infinitesimal ties."""
    diff = dict(A.terms)
    for v, c in B.terms.items():
        diff[v] = diff.get(v, Fraction(0)) - c
    diff = {v: c for v, c in diff.items() if c != 0}
    lead = None
    for v in diff:
        if lead is None or _vec_cmp(dict(v), dict(lead)) > 0:
            lead = v
    if lead is not None:
        return diff[lead] < 0
    if A.logconst != B.logconst:
        return A.logconst < B.logconst
    # total tie: only dropped infinitesimals could separate the germs
    return True


def exp_equivalent(m1, m2, max_depth=4):
    """Whether some n <= max_depth has m1 <= exp_n(m2) and m2 <= exp_n(m1).

    Exact on the canonical tower chain (up to sub-constant ties, which
    cannot change the answer by more than one exp level).  Both monomials
    must exceed every real.
    """
    for m in (m1, m2):
        vec = m.ladder_vector()
        if not vec or vec[max(vec)] <= 0:
            raise ChainError("exponential equivalence needs monomials above "
                             "all reals; got %r" % (m,))
    base1 = _ladder_sum_of_monomial(m1)
    base2 = _ladder_sum_of_monomial(m2)
    target1 = base1
    target2 = base2
    for n in range(max_depth + 1):
        if _sum_le(target1, base2) and _sum_le(target2, base1):
            return True
        target1 = target1.log()
        target2 = target2.log()
        if target1 is None or target2 is None:
            return False
    return False
