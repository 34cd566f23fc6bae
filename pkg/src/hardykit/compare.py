"""Eventual comparison of germ expressions.

General exp-log germs get a sampled, explicitly heuristic verdict under a
doubling-horizon policy; Inconclusive is an ordinary outcome.  Exact
verdicts exist only for monomials over a scale chain (see `monomial`).
Every certificate records its samples, so a verdict can be audited.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mpf

from .evaluate import analyze, eval_interval_raw
from .expr import DomainError, GermExpr, to_text
from .intervals import EvalInterval
from .numeric import TV, TowerOverflowError, workprec

__all__ = ["ComparePolicy", "EventualCertificate", "compare_eventually",
           "CLAIMS", "certificate_to_dict"]

CLAIMS = ("prec", "preceq", "sim", "lt_e", "gt_e")

_CLAIM_SYMBOL = {
    "prec": "<<", "preceq": "=<", "sim": "~", "lt_e": "<e", "gt_e": ">e",
}


@dataclass(frozen=True)
class ComparePolicy:
    horizon: Fraction = Fraction(2 ** 20)
    doublings: int = 16
    precision_bits: int = 256


@dataclass
class EventualCertificate:
    claim: str
    lhs: object
    rhs: object
    verdict: str                      # Holds | Fails | Inconclusive
    exact: bool
    samples: list = field(default_factory=list)   # (t, lhs iv, rhs iv)
    horizon: Fraction = Fraction(1)
    note: str = ""

    def holds(self):
        return self.verdict == "Holds"


def certificate_to_dict(cert, digits=17):
    """JSON-ready form of a certificate."""
    def _ivd(iv):
        try:
            lo = mpf_str(iv.lower, digits)
            hi = mpf_str(iv.upper, digits)
        except Exception:
            lo = hi = "?"
        return {"lower": lo, "upper": hi}

    def mpf_str(v, digits):
        import mpmath as mp
        if v.depth == 0:
            return mp.nstr(v.sign * v.mant, digits)
        return "exp_%d(%s)%s" % (abs(v.depth), mp.nstr(v.mant, digits),
                                 "^-1" if v.depth < 0 else "")

    return {
        "claim": cert.claim,
        "lhs": str(cert.lhs),
        "rhs": str(cert.rhs),
        "verdict": cert.verdict,
        "exact": cert.exact,
        "horizon": str(cert.horizon),
        "note": cert.note,
        "samples": [
            {"t": str(t), "lhs": _ivd(l), "rhs": _ivd(r)}
            for (t, l, r) in cert.samples
        ],
    }


_CONVERGED = Fraction(1, 2 ** 8)
_SIM_TOL = Fraction(1, 2 ** 16)


def compare_eventually(f, g, policy=None, claim="prec"):
    """Sampled certificate for `claim` about (f, g); exact is always False."""
    if claim not in CLAIMS:
        raise ValueError("unknown claim %r" % claim)
    if policy is None:
        policy = ComparePolicy()
    info_f = analyze(f)
    info_g = analyze(g)
    start = max(Fraction(policy.horizon), info_f.threshold, info_g.threshold,
                Fraction(1))
    prec = max(64, policy.precision_bits + 16)
    points = [start * (2 ** j) for j in range(policy.doublings + 1)]
    samples = []
    ratios = []        # (lo, hi) of f/g per sample, None when undecidable
    seps = []          # -1: f interval strictly below g; +1: above; 0: overlap
    for t in points:
        try:
            fl, fh = eval_interval_raw(f, t, prec)
            gl, gh = eval_interval_raw(g, t, prec)
        except (DomainError, TowerOverflowError):
            samples.append((t, None, None))
            ratios.append(None)
            seps.append(None)
            continue
        samples.append((t, EvalInterval(fl, fh, prec), EvalInterval(gl, gh, prec)))
        if fh.cmp(gl) < 0:
            seps.append(-1)
        elif gh.cmp(fl) < 0:
            seps.append(1)
        else:
            seps.append(0)
        with workprec(prec):
            if gl.sign == gh.sign != 0 and fl.sign == fh.sign:
                mags = sorted([abs(fl) / abs(gl), abs(fl) / abs(gh),
                               abs(fh) / abs(gl), abs(fh) / abs(gh)])
                sgn = fl.sign * gl.sign
                ratios.append((mags[0], mags[-1], sgn))
            else:
                ratios.append(None)
    verdict, note = _decide(claim, seps, ratios)
    cert = EventualCertificate(
        claim=claim, lhs=to_text(f) if isinstance(f, GermExpr) else f,
        rhs=to_text(g) if isinstance(g, GermExpr) else g,
        verdict=verdict, exact=False, samples=samples, horizon=start,
        note=note or "heuristic doubling-horizon policy")
    return cert


def _decide(claim, seps, ratios):
    ok = [s for s in seps if s is not None]
    if not ok or any(s is None for s in seps):
        return "Inconclusive", "evaluation failed at some sample points"
    if claim == "lt_e":
        if all(s == -1 for s in seps):
            return "Holds", "strict separation at every sample"
        if all(s == 1 for s in seps[len(seps) // 2:]):
            return "Fails", "reverse separation on the sampled tail"
        return "Inconclusive", ""
    if claim == "gt_e":
        if all(s == 1 for s in seps):
            return "Holds", "strict separation at every sample"
        if all(s == -1 for s in seps[len(seps) // 2:]):
            return "Fails", "reverse separation on the sampled tail"
        return "Inconclusive", ""
    if any(r is None for r in ratios):
        return "Inconclusive", "ratio undecidable at some sample"
    lo = [r[0] for r in ratios]
    hi = [r[1] for r in ratios]
    decreasing = all(hi[i + 1].cmp(hi[i]) < 0 for i in range(len(hi) - 1))
    increasing = all(lo[i + 1].cmp(lo[i]) > 0 for i in range(len(lo) - 1))
    conv_tol = TV(_CONVERGED)
    tail = min(3, len(hi) - 1)
    converged = all(
        (hi[-1 - i] - lo[-2 - i]).magnitude().cmp(conv_tol * max(abs(hi[-1 - i]), TV(1))) <= 0
        for i in range(tail)) if len(hi) >= 2 else False
    if claim == "prec":
        separated = all(s == -1 for s in seps) or all(
            h.cmp(TV(1)) < 0 for h in hi)
        if decreasing and separated and not (converged and lo[-1].cmp(TV(_CONVERGED)) > 0):
            return "Holds", "ratio shrinking toward zero at every sample"
        if converged and lo[-1].cmp(TV(_CONVERGED)) > 0:
            return "Fails", "ratio converges to a positive limit"
        if increasing and lo[-1].cmp(TV(4) * max(hi[0], TV(1))) > 0:
            return "Fails", "ratio diverges upward across samples"
        return "Inconclusive", ""
    if claim == "preceq":
        bound = TV(2) * max(hi[0], TV(1))
        if all(h.cmp(bound) <= 0 for h in hi) and not increasing:
            return "Holds", "ratio bounded and not increasing"
        if increasing and lo[-1].cmp(TV(4) * max(hi[0], TV(1))) > 0:
            return "Fails", "ratio diverges upward across samples"
        return "Inconclusive", ""
    if claim == "sim":
        signed_ok = all(r[2] > 0 for r in ratios)
        dev = [max(abs(h - TV(1)), abs(l - TV(1))) for l, h in
               ((lo[i], hi[i]) for i in range(len(hi)))]
        dev_dec = all(dev[i + 1].cmp(dev[i]) <= 0 for i in range(len(dev) - 1))
        if signed_ok and dev_dec and dev[-1].cmp(TV(_SIM_TOL)) <= 0:
            return "Holds", "signed ratio converging to one"
        if converged and (lo[-1].cmp(TV(1)) > 0 or hi[-1].cmp(TV(1)) < 0 or not signed_ok):
            return "Fails", "ratio converges away from one"
        if increasing and lo[-1].cmp(TV(4) * max(hi[0], TV(1))) > 0:
            return "Fails", "ratio diverges upward across samples"
        return "Inconclusive", ""
    raise AssertionError(claim)
