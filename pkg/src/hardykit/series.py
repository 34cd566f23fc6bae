"""Pseudolimit sums with certified tails and coefficient selection.

A strictly dominating family f_0 >> f_1 >> ... of positive germs sums to a
pseudolimit of its partial sums once representatives are arranged with
f_{n+1} <= f_n / 2 pointwise; the construction then certifies the tail
bound  sum - (f_0 + ... + f_n) <= 2 f_{n+1}  at every grid node.

Coefficient selection picks eps_i > 0 with sum eps_i * M_i^i finite
(M_i^n the running sup over [a, a+n]) so that f = sum eps_i f_i dominates
every f_n; optional guard families g_n are honored by staged shrinking that
never revisits earlier coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from .compare import ComparePolicy, EventualCertificate, compare_eventually
from .evaluate import eval_interval_raw
from .expr import Const, GermExpr, Sub, to_text
from .gridfn import GridFunction
from .monomial import Monomial, monomial_compare
from .numeric import TV, mpf_from_fraction, workprec

__all__ = ["GermFamily", "FamilyError", "normalize_pc_sequence",
           "build_pseudolimit", "choose_coefficients"]

_PREC = 120


class FamilyError(ValueError):
    pass


@dataclass
class GermFamily:
    """Explicit or rule-indexed germ family with dominance direction.

    direction 'decreasing' means f_n >> f_{n+1}; 'increasing' means
    f_n << f_{n+1}.  Certificates witness each adjacent pair.
    """

    members: object                  # list of GermExpr, or callable n -> GermExpr
    direction: str = "decreasing"
    certificates: list = field(default_factory=list)
    length: int = None

    def __post_init__(self):
        if self.direction not in ("decreasing", "increasing"):
            raise FamilyError("direction must be decreasing or increasing")
        if isinstance(self.members, (list, tuple)):
            self.members = list(self.members)
            self.length = len(self.members)

    def member(self, n):
        if isinstance(self.members, list):
            return self.members[n]
        return self.members(n)

    def is_indexed_rule(self):
        return not isinstance(self.members, list)

    @staticmethod
    def certified(members, direction="decreasing", policy=None, count=None):
        """Certify adjacent dominance by sampled comparison."""
        policy = policy or ComparePolicy(horizon=Fraction(8), doublings=10,
                                         precision_bits=96)
        fam = GermFamily(members, direction, [])
        n_pairs = (fam.length - 1) if fam.length is not None else (count or 4)
        for n in range(n_pairs):
            a, b = fam.member(n), fam.member(n + 1)
            small, big = (b, a) if direction == "decreasing" else (a, b)
            cert = compare_eventually(small, big, policy, "prec")
            if not cert.holds():
                raise FamilyError("adjacent dominance failed at index %d: %r"
                                  % (n, cert.verdict))
            fam.certificates.append(cert)
        return fam


# -- pc-sequence normalization -------------------------------------------------


def normalize_pc_sequence(terms, policy=None):
    """Difference family b_0 = a_0, b_n = a_n - a_{n-1} with b_n >> b_{n+1}.

    `terms` is a list of expressions or of rationals.  A rational sequence
    is treated with the ratio-2 convention: successive differences must
    shrink at least geometrically (factor >= 2), which is exactly what the
    pseudolimit arrangement consumes.  Partial sums of the output reproduce
    the input exactly by construction.
    """
    if len(terms) < 3:
        raise FamilyError("need at least three sequence terms")
    symbolic = isinstance(terms[0], GermExpr)
    if symbolic:
        diffs = [terms[0]]
        for a, b in zip(terms, terms[1:]):
            diffs.append(Sub(b, a))
        policy = policy or ComparePolicy(horizon=Fraction(8), doublings=10,
                                         precision_bits=96)
        certs = []
        for n in range(len(diffs) - 1):
            cert = compare_eventually(diffs[n + 1], diffs[n], policy, "prec")
            if not cert.holds():
                raise FamilyError(
                    "difference dominance failed at index %d (verdict %s)"
                    % (n, cert.verdict))
            certs.append(cert)
        return GermFamily(diffs, "decreasing", certs)
    values = [Fraction(t) for t in terms]
    diffs = [values[0]]
    for a, b in zip(values, values[1:]):
        d = b - a
        if d <= 0:
            raise FamilyError("sequence is not strictly increasing")
        diffs.append(d)
    certs = []
    for n in range(len(diffs) - 1):
        if diffs[n + 1] * 2 > diffs[n]:
            raise FamilyError(
                "difference ratio above 1/2 at index %d (constants use the "
                "ratio-2 dominance convention)" % n)
        certs.append(EventualCertificate(
            claim="prec", lhs=str(diffs[n + 1]), rhs=str(diffs[n]),
            verdict="Holds", exact=True, samples=[], horizon=Fraction(1),
            note="constant ratio <= 1/2"))
    return GermFamily([Const(d) for d in diffs], "decreasing", certs)


# -- pseudolimit construction ----------------------------------------------------


def _family_values(fam, n, grid_mpf, prec):
    expr = fam.member(n)
    out = []
    for t, tm in grid_mpf:
        lo, hi = eval_interval_raw(expr, t, prec)
        out.append((lo.to_mpf() + hi.to_mpf()) / 2)
    return out


def build_pseudolimit(family, horizon, tol=Fraction(1, 10 ** 12),
                      grid_points=257, start=None, max_terms=256):
    """Sum the family on [start, horizon] with certified tails.

    Representatives are arranged to satisfy f_{n+1} <= f_n / 2 pointwise by
    per-index left endpoints with a continuous ramp to zero below them (the
    germ is unchanged: only behavior near the left edge moves).  Indexed
    rules are truncated once the geometric tail bound drops below `tol`.

    Returns (GridFunction of the sum, list of tail certificates); the grid
    function's meta records the clamp points.
    """
    if family.direction != "decreasing":
        raise FamilyError("pseudolimit sums need a decreasing-dominance family")
    horizon = Fraction(horizon)
    with workprec(_PREC):
        tolm = mpf_from_fraction(Fraction(tol))
        if start is None:
            start = Fraction(1)
        start = Fraction(start)
        grid = GridFunction.uniform_grid(start, horizon, grid_points)
        grid_mpf = [(t, mpf_from_fraction(t)) for t in grid]
        length = family.length if family.length is not None else max_terms

        rows = []          # arranged representative values per index
        clamp_at = []      # per-index left endpoint (None = untouched)
        raw_prev = None
        n = 0
        while n < length:
            raw = _family_values(family, n, grid_mpf, _PREC)
            if n == 0:
                rows.append(raw)
                clamp_at.append(None)
                raw_prev = raw
            else:
                # find the first node from which raw <= prev/2 holds onward
                idx = None
                for i in range(len(grid)):
                    if all(raw[j] <= raw_prev[j] / 2 for j in range(i, len(grid))):
                        idx = i
                        break
                if idx is None:
                    raise FamilyError(
                        "ratio arrangement failed inside the horizon at "
                        "index %d" % n)
                if idx == 0:
                    arranged = raw
                    clamp_at.append(None)
                else:
                    # continuous ramp from 0 below the certified endpoint,
                    # capped by prev/2 so the arrangement stays pointwise
                    arranged = []
                    t_lo = grid_mpf[max(idx - 1, 0)][1]
                    t_hi = grid_mpf[idx][1]
                    for j in range(len(grid)):
                        if j >= idx:
                            arranged.append(raw[j])
                        else:
                            w = (grid_mpf[j][1] - t_lo) / (t_hi - t_lo)
                            w = max(mpf(0), min(mpf(1), w))
                            arranged.append(min(raw[j] * w, raw_prev[j] / 2))
                    clamp_at.append(grid[idx])
                rows.append(arranged)
                raw_prev = arranged
            for j in range(len(grid)):
                if rows[-1][j] < 0:
                    raise FamilyError("family member %d is negative at %s"
                                      % (n, grid[j]))
            n += 1
            if family.is_indexed_rule() and n >= 2:
                # truncation: the remaining tail is at most 2 * next row
                if max(raw_prev) * 2 <= tolm:
                    break

        total = [mpf(0)] * len(grid)
        for row in rows:
            for j in range(len(grid)):
                total[j] += row[j]
        # certified tails: total - partial_n <= 2 f_{n+1} at every node
        truncation = (max(rows[-1]) * 2 if family.is_indexed_rule()
                      and n < length else mpf(0))
        certs = []
        partial = [mpf(0)] * len(grid)
        for k, row in enumerate(rows):
            for j in range(len(grid)):
                partial[j] += row[j]
            if k + 1 >= len(rows):
                break
            ok = all(total[j] - partial[j] <= 2 * rows[k + 1][j] + tolm
                     for j in range(len(grid)))
            certs.append(EventualCertificate(
                claim="lt_e", lhs="tail_%d" % k, rhs="2*f_%d" % (k + 1),
                verdict="Holds" if ok else "Fails", exact=False,
                samples=[], horizon=start,
                note="tail bound checked at %d grid nodes; truncation %s"
                     % (len(grid), mp.nstr(truncation, 6))))
            if not ok:
                raise FamilyError("tail bound failed after %d terms" % k)
        gf = GridFunction(grid, [TV(v) for v in total], None, {
            "tag": "pseudolimit_sum",
            "terms": len(rows),
            "truncation_bound": mp.nstr(truncation, 8),
            "clamp_points": [str(c) if c is not None else None for c in clamp_at],
            "sub_horizon": str(horizon),
        })
        return gf, certs


# -- coefficient selection ----------------------------------------------------


def choose_coefficients(family, guards=None, horizon=64, grid_points=257,
                        cutoff=None):
    """eps_i and f = sum eps_i f_i dominating every member, under guards.

    The base schedule is eps_i = 2^-i / max(1, M_i^i); guard g_n is
    processed at stage n by fixing a left endpoint b_n past which
    eps_i f_i <= g_n / 2^{i+1} for i < n already holds, then shrinking only
    eps_i with i >= n.  Returns (report, GridFunction, certificates).
    """
    if family.direction != "increasing":
        raise FamilyError("coefficient selection needs an increasing family")
    if family.length is None and cutoff is None:
        raise FamilyError("indexed-rule families need an explicit cutoff")
    count = cutoff or family.length
    if count < 1:
        raise FamilyError("empty family")
    horizon = Fraction(horizon)
    with workprec(_PREC):
        a = Fraction(1)
        grid = GridFunction.uniform_grid(a, horizon, grid_points)
        grid_mpf = [(t, mpf_from_fraction(t)) for t in grid]
        rows = [_family_values(family, i, grid_mpf, _PREC) for i in range(count)]
        for i, row in enumerate(rows):
            if min(row) < 0:
                raise FamilyError("family member %d is negative" % i)
        # M_i^i = sup over [a, a+i] (window clipped to the horizon)
        m_ii = []
        for i, row in enumerate(rows):
            window = [v for (t, _), v in zip(grid_mpf, row)
                      if t <= a + max(i, 1)]
            m_ii.append(max(window) if window else mpf(0))
        eps = [mpf(2) ** (-i) / max(mpf(1), m_ii[i]) for i in range(count)]
        stage_of = [0] * count

        guard_rows = []
        stage_points = []
        if guards is not None:
            g_count = (guards.length if guards.length is not None
                       else len(rows))
            for ng in range(g_count):
                guard_rows.append(_family_values(guards, ng, grid_mpf, _PREC))
            for n, grow in enumerate(guard_rows):
                if min(grow) <= 0:
                    raise FamilyError("guard %d is not strictly positive" % n)
                # left endpoint where already-fixed coefficients comply
                b_idx = None
                for jstart in range(len(grid)):
                    ok = all(
                        eps[i] * rows[i][j] <= grow[j] / 2 ** (i + 1)
                        for i in range(min(n, count))
                        for j in range(jstart, len(grid)))
                    if ok:
                        b_idx = jstart
                        break
                if b_idx is None:
                    raise FamilyError(
                        "guard %d cannot be honored inside the horizon "
                        "without revisiting fixed coefficients" % n)
                stage_points.append(grid[b_idx])
                for i in range(n, count):
                    quotients = [grow[j] / (2 ** (i + 1) * rows[i][j])
                                 for j in range(b_idx, len(grid))
                                 if rows[i][j] > 0]
                    cap = min(quotients) if quotients else eps[i]
                    if cap < eps[i]:
                        eps[i] = cap
                        stage_of[i] = n
        total = [mpf(0)] * len(grid)
        for i in range(count):
            for j in range(len(grid)):
                total[j] += eps[i] * rows[i][j]
        certs = []
        # f >> f_n: the sum is at least eps_{n+1} f_{n+1}, and the sampled
        # ratio f / f_n grows along the tail of the grid
        for nview in range(count - 1):
            ratios = [total[j] / rows[nview][j]
                      for j in range(len(grid)) if rows[nview][j] > 0]
            tail = ratios[-min(8, len(ratios)):]
            growing = all(tail[k + 1] >= tail[k] * mpf("0.999")
                          for k in range(len(tail) - 1))
            certs.append(EventualCertificate(
                claim="prec", lhs="f_%d" % nview, rhs="sum",
                verdict="Holds" if growing else "Inconclusive", exact=False,
                samples=[], horizon=a,
                note="sampled ratio growth across the horizon"))
        if guards is not None:
            for n, grow in enumerate(guard_rows):
                b_n = stage_points[n]
                ok = all(total[j] <= grow[j]
                         for j in range(len(grid)) if grid[j] >= b_n)
                certs.append(EventualCertificate(
                    claim="lt_e", lhs="sum", rhs="guard_%d" % n,
                    verdict="Holds" if ok else "Fails", exact=False,
                    samples=[], horizon=b_n,
                    note="guard honored past the recorded stage point"))
                if not ok:
                    raise FamilyError("guard %d violated past %s" % (n, b_n))
        report = [{"i": i,
                   "eps": mp.nstr(eps[i], 17),
                   "M_ii": mp.nstr(m_ii[i], 17),
                   "stage": stage_of[i]} for i in range(count)]
        gf = GridFunction(grid, [TV(v) for v in total], None, {
            "tag": "coefficient_sum",
            "terms": count,
            "stage_points": [str(p) for p in stage_points],
        })
        return report, gf, certs
