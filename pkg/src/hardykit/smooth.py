"""Smooth-function constructions on finite horizons.

Everything here follows the classical mollifier playbook: convolution
against the compact bump for upper minorants, piecewise-affine skeletons
with corner rounding for strict intermediaries, affine cross-fades for
countable interleaving, and finite-order Taylor data glued in with flat
ramps for jet bridging.  Outputs are grid functions whose strict-separation
postconditions are verified on a 10x refined grid before they are returned.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from . import mollifier, quadrature
from .gridfn import GridError, GridFunction
from .numeric import TV, mpf_from_fraction, workprec

__all__ = [
    "SeparationError",
    "smooth_upper_minorant",
    "affine_intermediary",
    "smooth_between",
    "interleave",
    "jet_bridge",
]

_PREC = 120
_MAX_HALVINGS = 20


class SeparationError(ValueError):
    """A strict-separation pre- or postcondition failed."""


def _values_mpf(gf):
    return [v.to_mpf() for v in gf.values]


def _refined_points(grid, factor=10):
    pts = []
    for a, b in zip(grid, grid[1:]):
        step = (b - a) / factor
        pts.extend(a + step * j for j in range(factor))
    pts.append(grid[-1])
    return pts


# -- decreasing smooth upper minorant ----------------------------------------


def smooth_upper_minorant(theta, grid_points=None):
    """Decreasing smooth zeta with zeta < theta and zeta' > -1 on the grid.

    Clamp theta to the decreasing function min(1, running minimum), then
    convolve with the mollifier and shift by one.  The convolution window
    [t, t+2] extends past the horizon with the last clamped value; the meta
    block records the extension.
    """
    with workprec(_PREC):
        vals = _values_mpf(theta)
        if min(vals) <= 0:
            raise SeparationError("upper minorant needs strictly positive input")
        clamped = []
        running = mpf(1)
        for v in vals:
            running = min(running, v, mpf(1))
            clamped.append(running)
        grid = theta.grid
        gridf = [mpf_from_fraction(t) for t in grid]
        t_end = gridf[-1]

        def clamp_at(u):
            if u <= gridf[0]:
                return clamped[0]
            if u >= t_end:
                return clamped[-1]
            lo, hi = 0, len(gridf) - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if gridf[mid] <= u:
                    lo = mid
                else:
                    hi = mid
            w = (u - gridf[lo]) / (gridf[lo + 1] - gridf[lo])
            return clamped[lo] * (1 - w) + clamped[lo + 1] * w

        def conv(t, kernel_order):
            # integral over s in [-1, 1] of clamp(t + 1 - s) * rho^{(k)}(s),
            # split at the clamp's breakpoints for Simpson friendliness
            breaks = [mpf(-1)]
            for g in gridf:
                s = t + 1 - g
                if -1 < s < 1:
                    breaks.append(s)
            breaks.append(mpf(1))
            breaks = sorted(set(breaks))
            total = mpf(0)
            err = mpf(0)
            for a, b in zip(breaks, breaks[1:]):
                v, e = quadrature.integrate(
                    lambda s: clamp_at(t + 1 - s) * mollifier.rho_derivative(s, kernel_order),
                    a, b, tol=mpf(2) ** -36, max_depth=16)
                total += v
                err += e
            return total, err

        out_vals = []
        out_d1 = []
        out_err = []
        for t in gridf:
            v, ev = conv(t, 0)
            d, ed = conv(t, 1)
            out_vals.append(v)
            out_d1.append(d)
            out_err.append(ev + ed)

        for i, t in enumerate(grid):
            if not out_vals[i] + out_err[i] < clamped[i]:
                raise SeparationError("minorant failed zeta < theta at t=%s" % t)
            if not out_d1[i] - out_err[i] > -1:
                raise SeparationError("minorant slope not above -1 at t=%s" % t)
        for i in range(len(grid) - 1):
            slack = out_err[i] + out_err[i + 1]
            if not out_vals[i + 1] <= out_vals[i] + slack:
                raise SeparationError("minorant not decreasing at node %d" % i)
        mass = mollifier.mollifier_mass()[0]
        meta = {
            "tag": "smooth_upper_minorant",
            "sub_horizon": str(grid[-1]),
            "window_extension": "constant clamp past the horizon",
            "mass_bound": mp.nstr(mass, 20),
            "quadrature_error": mp.nstr(max(out_err), 6),
        }
        return GridFunction(grid, [TV(v) for v in out_vals],
                            {1: [TV(d) for d in out_d1]}, meta)


# -- piecewise-affine intermediary --------------------------------------------


def affine_intermediary(f, g, a, b):
    """Piecewise-affine phi with f < phi < g on [a, b].

    Breakpoints are uniform, count chosen from the sampled modulus of
    continuity against half the minimal separation; the endpoint ordinates
    are the corridor midpoints.
    """
    a, b = Fraction(a), Fraction(b)
    fa, fb = f.span()
    ga, gb = g.span()
    if not (fa <= a < b <= fb and ga <= a < b <= gb):
        raise GridError("intermediary window outside the input spans")
    with workprec(_PREC):
        check_pts = sorted({t for t in set(f.grid) | set(g.grid) if a <= t <= b}
                           | {a, b})
        fv = {t: f.interp(t).to_mpf() for t in check_pts}
        gv = {t: g.interp(t).to_mpf() for t in check_pts}
        eps = min(gv[t] - fv[t] for t in check_pts) / 2
        if not eps > 0:
            raise SeparationError("inputs are not strictly separated on [%s, %s]"
                                  % (a, b))
        n = 1
        while n < (1 << _MAX_HALVINGS):
            delta = (b - a) / n
            ok = True
            for t0, t1 in zip(check_pts, check_pts[1:]):
                for h in (fv, gv):
                    if abs(h[t1] - h[t0]) >= eps and (t1 - t0) <= delta:
                        ok = False
                        break
                if not ok:
                    break
            # modulus over each width-delta window, measured on check points
            if ok:
                i = 0
                for j in range(len(check_pts)):
                    while check_pts[j] - check_pts[i] > delta:
                        i += 1
                    for h in (fv, gv):
                        lo = min(h[t] for t in check_pts[i:j + 1])
                        hi = max(h[t] for t in check_pts[i:j + 1])
                        if hi - lo >= eps:
                            ok = False
                            break
                    if not ok:
                        break
            if ok:
                break
            n *= 2
        knots = [a + (b - a) * i / n for i in range(n + 1)]
        mid = {}
        for t in knots:
            fm = f.interp(t).to_mpf()
            gm = g.interp(t).to_mpf()
            mid[t] = (fm + gm) / 2
        grid = sorted(set(knots) | set(check_pts))
        vals = []
        for t in grid:
            i = max(j for j in range(len(knots)) if knots[j] <= t)
            if i == len(knots) - 1:
                vals.append(mid[knots[-1]])
                continue
            t0, t1 = knots[i], knots[i + 1]
            w = mpf_from_fraction((t - t0) / (t1 - t0))
            vals.append(mid[t0] * (1 - w) + mid[t1] * w)
        out = GridFunction(grid, [TV(v) for v in vals], None, {
            "tag": "affine_intermediary",
            "breakpoints": [str(t) for t in knots],
            "pieces": n,
            "separation_margin": mp.nstr(eps, 17),
        })
        _check_strictly_between(f, g, out, grid)
        return out


def _check_strictly_between(f, g, y, points, refine=1):
    with workprec(_PREC):
        pts = points if refine == 1 else _refined_points(list(points), refine)
        fa, fb = f.span()
        for t in pts:
            if t < fa or t > fb:
                continue
            yv = y.interp(t)
            if not (f.interp(t).cmp(yv) < 0 and yv.cmp(g.interp(t)) < 0):
                raise SeparationError("output not strictly between inputs at t=%s"
                                      % t)


# -- smooth strict intermediary ------------------------------------------------


def smooth_between(f, g, corner_radius=None):
    """Smooth y with f < y < g: affine skeleton with bump-rounded corners.

    The corner radius defaults to a quarter of the local breakpoint spacing
    and is halved (at most 20 times) until the rounded curve stays inside
    the corridor.
    """
    a, b = f.span()
    ga, gb = g.span()
    a, b = max(a, ga), min(b, gb)
    if not a < b:
        raise SeparationError("input spans do not overlap")
    skeleton = affine_intermediary(f, g, a, b)
    knots = [Fraction(t) for t in skeleton.meta["breakpoints"]]
    with workprec(_PREC):
        kv = [skeleton.interp(t).to_mpf() for t in knots]
        slopes = []
        for i in range(len(knots) - 1):
            slopes.append((kv[i + 1] - kv[i]) / mpf_from_fraction(knots[i + 1] - knots[i]))

        def piece(i, t):
            return kv[i] + slopes[i] * mpf_from_fraction(t - knots[i])

        spacing = min(k2 - k1 for k1, k2 in zip(knots, knots[1:]))
        radius = Fraction(corner_radius) if corner_radius else spacing / 4
        for _ in range(_MAX_HALVINGS):
            try:
                y = _rounded(f, g, knots, piece, radius, a, b)
                return y
            except SeparationError:
                radius /= 2
        raise SeparationError("corner rounding failed within the halving budget")


def _rounded(f, g, knots, piece, radius, a, b):
    corners = knots[1:-1]

    def evaluate(t):
        i = max(j for j in range(len(knots) - 1) if knots[j] <= t)
        if t == knots[-1]:
            i = len(knots) - 2
        v = piece(i, t)
        for ci, c in enumerate(corners):
            if abs(t - c) < radius:
                w = mollifier.bump(mpf_from_fraction((Fraction(t) - (c - radius))
                                                     / (2 * radius)))
                left = piece(ci, t)
                right = piece(ci + 1, t)
                v = (1 - w) * left + w * right
                break
        return v

    def evaluate_d1(t):
        i = max(j for j in range(len(knots) - 1) if knots[j] <= t)
        if t == knots[-1]:
            i = len(knots) - 2
        s = (piece(i, knots[i + 1]) - piece(i, knots[i])) \
            / mpf_from_fraction(knots[i + 1] - knots[i])
        for ci, c in enumerate(corners):
            if abs(t - c) < radius:
                u = mpf_from_fraction((Fraction(t) - (c - radius)) / (2 * radius))
                w = mollifier.bump(u)
                dw = mollifier.bump_derivative(u, 1) / mpf_from_fraction(2 * radius)
                left = piece(ci, t)
                right = piece(ci + 1, t)
                sl = (piece(ci, knots[ci + 1]) - piece(ci, knots[ci])) \
                    / mpf_from_fraction(knots[ci + 1] - knots[ci])
                sr = (piece(ci + 1, knots[ci + 2]) - piece(ci + 1, knots[ci + 1])) \
                    / mpf_from_fraction(knots[ci + 2] - knots[ci + 1])
                s = (1 - w) * sl + w * sr + dw * (right - left)
                break
        return s

    sample_grid = sorted(set(knots)
                         | {min(max(c + d * radius / 2, a), b)
                            for c in corners for d in (-2, -1, 0, 1, 2)}
                         | set(f.grid) | set(g.grid))
    sample_grid = [t for t in sample_grid if a <= t <= b]
    vals = [TV(evaluate(t)) for t in sample_grid]
    d1 = [TV(evaluate_d1(t)) for t in sample_grid]
    y = GridFunction(sample_grid, vals, {1: d1}, {
        "tag": "smooth_between",
        "corner_radius": str(radius),
        "sub_horizon": str(b),
    })
    _check_strictly_between(f, g, y, sample_grid)
    _check_strictly_between(f, g, y, sample_grid, refine=10)
    return y


# -- countable interleaver -------------------------------------------------------


def interleave(lowers, uppers, switch_points):
    """Smooth phi between every pair past its switch point.

    Affine cross-fades build a continuous envelope pair (f, g) from the two
    families, with f = lowers[n] blended into lowers[n+1] on
    [a_n, a_{n+1}] and likewise above; a smooth strict intermediary of the
    envelopes then lies between lowers[n] and uppers[n] past a_n for
    every n whose switch point is inside the horizon.
    """
    if not lowers or len(lowers) != len(uppers):
        raise SeparationError("families must be nonempty and equally long")
    switch_points = [Fraction(t) for t in switch_points]
    if len(switch_points) != len(lowers):
        raise SeparationError("need one switch point per family member")
    for s, t in zip(switch_points, switch_points[1:]):
        if not s < t:
            raise SeparationError("switch points must be strictly increasing")
    a = lowers[0].span()[0]
    b = min(min(f.span()[1] for f in lowers), min(g.span()[1] for g in uppers))
    with workprec(_PREC):
        base_grid = sorted({t for fn in lowers + uppers for t in fn.grid
                            if a <= t <= b} | set(sp for sp in switch_points
                                                  if a <= sp <= b) | {a, b})
        n_fam = len(lowers)

        def envelope(family, t):
            idx = 0
            while idx + 1 < n_fam and switch_points[idx + 1] <= t:
                idx += 1
            if idx + 1 >= n_fam or t <= switch_points[idx]:
                return family[idx].interp(t).to_mpf()
            t0, t1 = switch_points[idx], switch_points[idx + 1]
            if t >= t1:
                return family[idx + 1].interp(t).to_mpf()
            w = mpf_from_fraction((t - t0) / (t1 - t0))
            return (family[idx].interp(t).to_mpf() * (1 - w)
                    + family[idx + 1].interp(t).to_mpf() * w)

        # ordering preconditions past each switch point
        for n in range(n_fam - 1):
            for t in base_grid:
                if t < switch_points[n + 1]:
                    continue
                if lowers[n].interp(t).cmp(lowers[n + 1].interp(t)) > 0:
                    raise SeparationError(
                        "lower family not increasing past a_%d at t=%s" % (n + 1, t))
                if uppers[n + 1].interp(t).cmp(uppers[n].interp(t)) > 0:
                    raise SeparationError(
                        "upper family not decreasing past a_%d at t=%s" % (n + 1, t))
        fenv = GridFunction(base_grid, [TV(envelope(lowers, t)) for t in base_grid],
                            None, {"tag": "interleave_lower_envelope"})
        genv = GridFunction(base_grid, [TV(envelope(uppers, t)) for t in base_grid],
                            None, {"tag": "interleave_upper_envelope"})
        phi = smooth_between(fenv, genv)
        for n in range(n_fam):
            lo_t = max(a, switch_points[n])
            for t in _refined_points([g for g in base_grid if g >= lo_t] or [lo_t, b]):
                if t > b:
                    continue
                pv = phi.interp(t)
                if not (lowers[n].interp(t).cmp(pv) < 0
                        and pv.cmp(uppers[n].interp(t)) < 0):
                    raise SeparationError(
                        "interleave output escapes corridor %d at t=%s" % (n, t))
        return phi.with_meta(tag="interleave", families=n_fam,
                             switch_points=[str(s) for s in switch_points])


# -- finite-jet bridging ----------------------------------------------------------


def jet_bridge(phi, zeta, a, b, left_jet, right_jet, order):
    """theta matching the given jets to `order` at a and b, phi < theta < zeta
    strictly between the endpoints.

    Taylor polynomials from the jets are glued onto the corridor midline
    with flat ramps (all ramp derivatives vanish at the join), so the jets
    are exact to the requested order.  The ramp width is halved until the
    corridor check passes.
    """
    a, b = Fraction(a), Fraction(b)
    if not a < b:
        raise SeparationError("need a < b")
    if len(left_jet) != order + 1 or len(right_jet) != order + 1:
        raise SeparationError("jets must list orders 0..m")
    with workprec(_PREC):
        pa, za = phi.interp(a).to_mpf(), zeta.interp(a).to_mpf()
        pb, zb = phi.interp(b).to_mpf(), zeta.interp(b).to_mpf()
        l0 = mpf_from_fraction(Fraction(left_jet[0]))
        r0 = mpf_from_fraction(Fraction(right_jet[0]))
        pinched_left = (pa == za) or (l0 == pa)
        if not (pa <= l0 < za if pinched_left else pa < l0 < za):
            raise SeparationError("left jet ordinate outside the corridor")
        if not pb < r0 < zb:
            raise SeparationError("right jet ordinate outside the corridor")

        lj = [mpf_from_fraction(Fraction(c)) for c in left_jet]
        rj = [mpf_from_fraction(Fraction(c)) for c in right_jet]

        def taylor(jet, center, t):
            acc = mpf(0)
            fact = 1
            dt = mpf_from_fraction(t - center)
            for j, c in enumerate(jet):
                if j:
                    fact *= j
                acc += c * dt ** j / fact
            return acc

        width = (b - a) / 4
        for _ in range(_MAX_HALVINGS):
            try:
                return _bridge_once(phi, zeta, a, b, lj, rj, taylor, width,
                                    order, pinched_left)
            except SeparationError:
                width /= 2
        raise SeparationError("jet bridge failed within the halving budget")


def _bridge_once(phi, zeta, a, b, lj, rj, taylor, width, order, pinched_left):
    def mid(t):
        return (phi.interp(t).to_mpf() + zeta.interp(t).to_mpf()) / 2

    def ramp(t, lo, hi):
        # 0 on (-oo, lo], 1 on [hi, +oo), flat at both ends
        return mollifier.bump(mpf_from_fraction((Fraction(t) - lo) / (hi - lo)))

    def evaluate(t):
        base = mid(t)
        wl = ramp(t, a + width, a + 2 * width)
        v = taylor(lj, a, t) * (1 - wl) + base * wl
        wr = ramp(t, b - 2 * width, b - width)
        return v * (1 - wr) + taylor(rj, b, t) * wr

    refine = []
    for t0, t1 in zip(phi.grid, phi.grid[1:]):
        if t1 < a or t0 > b:
            continue
        refine.append(max(t0, a))
    refine.append(b)
    grid = sorted(set(refine)
                  | {a, a + width, a + 2 * width, b - 2 * width, b - width, b}
                  | {a + (b - a) * i / 64 for i in range(65)})
    grid = [t for t in grid if a <= t <= b]
    vals = [TV(evaluate(t)) for t in grid]
    out = GridFunction(grid, vals, None, {
        "tag": "jet_bridge", "order": order, "ramp_width": str(width),
    })
    for t in _refined_points(grid, 4):
        if t <= a or t >= b:
            continue
        yv = out.interp(t)
        if not (phi.interp(t).cmp(yv) < 0 and yv.cmp(zeta.interp(t)) < 0):
            raise SeparationError("bridge escapes the corridor at t=%s" % t)
    return out
