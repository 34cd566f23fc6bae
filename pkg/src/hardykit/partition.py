"""Admissible partitions of unity adapted to a family of positive actives.

Given actives phi_0, phi_1, ... (positive germs with shrinking dominance),
set g_n(r) = integral_1^r phi_n.  The window end b_{n+1} solves
g_n(b_{n+1}) = g_n(a_{n+1}) + 1, and the blend

    beta_{n+1}(t) = alpha(g_n(t) - g_n(a_{n+1}))          for t <= b_{n+1}
    beta_{n+1}(t) = 1 - alpha(g_{n+1}(t) - g_{n+1}(a_{n+2}))  above

is a C-partition of unity whose rescaled derivatives obey the bump bounds:
(phi_n^{-1} d/dt)^k beta_{n+1} = alpha^(k)(g_n(t) - g_n(a_{n+1})) on the
overlap, so |.| <= C_k there.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from . import mollifier, quadrature
from .deltapoly import delta_tables, log_derivative_expr
from .evaluate import eval_interval_raw
from .expr import Neg, diff
from .gridfn import GridFunction
from .numeric import TV, fraction_from_mpf, mpf_from_fraction, workprec

__all__ = ["AdmissiblePartition", "PartitionError", "build_partition",
           "blend_functions"]

_PREC = 120


class PartitionError(ValueError):
    pass


class AdmissiblePartition:
    """Schedules a_n < b_n < a_{n+1}, blend columns, actives, bump bounds."""

    def __init__(self, a_schedule, b_schedule, betas, actives, c_table,
                 overlap_residual, bound_table, meta):
        self.a_schedule = a_schedule
        self.b_schedule = b_schedule
        self.betas = betas
        self.actives = actives
        self.c_table = c_table
        self.overlap_residual = overlap_residual
        self.bound_table = bound_table
        self.meta = meta

    def __len__(self):
        return len(self.betas)

    def report(self):
        return {
            "a_schedule": [str(t) for t in self.a_schedule],
            "b_schedule": [str(t) for t in self.b_schedule],
            "overlap_residual": mp.nstr(self.overlap_residual, 8),
            "bound_table": self.bound_table,
            "meta": self.meta,
        }


_PHI_CACHE = {}


def _phi_value_mpf(phi, s, prec):
    key = (phi.key(), mp.mp.prec, s)
    hit = _PHI_CACHE.get(key)
    if hit is None:
        lo, hi = eval_interval_raw(phi, fraction_from_mpf(s), prec)
        hit = (lo.to_mpf() + hi.to_mpf()) / 2
        _PHI_CACHE[key] = hit
    return hit


def _solve_window_end(phi, a_start, prec, step0=Fraction(1)):
    """b > a_start with integral_{a_start}^{b} phi = 1.

    Monotone root finding: bracket by doubling, then Newton steps with
    incremental panel integrals (the derivative of the mass is phi itself).
    """
    def seg(lo, hi):
        if lo == hi:
            return mpf(0)
        v, _ = quadrature.integrate(lambda s: _phi_value_mpf(phi, s, prec),
                                    mpf_from_fraction(lo), mpf_from_fraction(hi),
                                    tol=mpf(2) ** -44, max_depth=20)
        return v

    cur = a_start + step0
    acc = seg(a_start, cur)
    tries = 0
    while acc < 1:
        step = cur - a_start
        acc += seg(cur, cur + step)
        cur = cur + step
        tries += 1
        if tries > 64:
            raise PartitionError("window-end search escaped the horizon near %s"
                                 % a_start)
    # Newton from the bracket top; each step only integrates the increment
    b = cur
    mass_b = acc
    for _ in range(64):
        slope = _phi_value_mpf(phi, mpf_from_fraction(b), prec)
        if slope <= 0:
            raise PartitionError("active lost positivity near %s" % b)
        delta = fraction_from_mpf((mass_b - 1) / slope)
        if delta == 0:
            break
        nb = b - delta
        if nb <= a_start:
            nb = (a_start + b) / 2
        mass_b += seg(b, nb)
        b = nb
        if abs(delta) <= Fraction(1, 10 ** 16):
            break
    return b


def build_partition(phi_list, a_schedule, samples_per_window=33,
                    bound_orders=3):
    """Admissible partition for the actives, with verified overlap and bounds.

    a_schedule seeds a_0 < a_1 < ...; each a_{n+2} is pushed past b_{n+1}
    when the seed sits too early.  Verification: the overlap identity
    |beta_n + beta_{n+1} - 1| on [a_{n+1}, b_{n+1}] and the rescaled
    derivative bounds |delta_n^k beta_{n+1}| <= C_k at samples, computed
    through the R-table and cross-checked against the exact form
    alpha^(k)(g_n(t) - g_n(a_{n+1})).
    """
    n_act = len(phi_list)
    if n_act < 2:
        raise PartitionError("need at least two actives")
    a = [Fraction(t) for t in a_schedule]
    if len(a) != n_act:
        raise PartitionError("need one schedule seed per active")
    if a[0] < 1:
        raise PartitionError("schedule must start at 1 or later")
    with workprec(_PREC):
        for phi in phi_list:
            lo, _ = eval_interval_raw(phi, a[0], _PREC)
            if lo.sign <= 0:
                raise PartitionError("active not positive at the schedule start")
        # window ends; grow later seeds when a window would overrun them
        b = [None] * n_act
        for n in range(n_act - 1):
            b[n + 1] = _solve_window_end(phi_list[n], a[n + 1], _PREC)
            if n + 2 < n_act and a[n + 2] <= b[n + 1]:
                a[n + 2] = _snap(b[n + 1] + (b[n + 1] - a[n + 1]))
        b[0] = _snap(a[0] + (a[1] - a[0]) / 2)
        for n in range(n_act - 1):
            if not a[n] < b[n] < a[n + 1]:
                raise PartitionError("schedule violates a_n < b_n < a_{n+1}")

        horizon = b[-1] if b[-1] is not None else a[-1]
        grid_nodes = sorted({a[0], horizon}
                            | set(a) | {x for x in b if x is not None})
        fine = []
        for t0, t1 in zip(grid_nodes, grid_nodes[1:]):
            for j in range(samples_per_window):
                fine.append(t0 + (t1 - t0) * Fraction(j, samples_per_window))
        fine.append(grid_nodes[-1])
        fine = sorted(set(fine))

        g_tables = [_cumulative_g_nodes(phi, fine, _PREC) for phi in phi_list]

        def beta_value(n, t):
            # support [a_n, b_{n+1}]
            if n >= 1:
                up_start, up_end = a[n], b[n]
                gn = g_tables[n - 1]
                if t <= up_start:
                    return mpf(0)
                if t < up_end:
                    return mollifier.bump(gn[t] - gn[up_start])
            if n == 0 and t <= b[0]:
                return mollifier.bump(mpf_from_fraction((t - a[0]) / (b[0] - a[0])))
            if n + 1 < n_act and b[n + 1] is not None:
                down_start, down_end = a[n + 1], b[n + 1]
                if t <= down_start:
                    return mpf(1)
                if t >= down_end:
                    return mpf(0)
                gn = g_tables[n]
                return 1 - mollifier.bump(gn[t] - gn[down_start])
            return mpf(1)

        betas = []
        for n in range(n_act):
            col = [beta_value(n, t) for t in fine]
            betas.append(GridFunction(fine, [TV(v) for v in col], None, {
                "tag": "partition_beta",
                "index": n,
                "support": [str(a[n]), str(b[n + 1]) if n + 1 < n_act else "horizon"],
            }))

        # overlap identity
        residual = mpf(0)
        for n in range(n_act - 1):
            for i, t in enumerate(fine):
                if a[n + 1] <= t <= b[n + 1]:
                    s = betas[n].values[i].to_mpf() + betas[n + 1].values[i].to_mpf()
                    residual = max(residual, abs(s - 1))

        # rescaled-derivative bounds on the overlaps
        bounds = mollifier.bump_bounds(bound_orders)
        c_table = [bb.c_m for bb in bounds]
        _, R = delta_tables(max(bound_orders, 1))
        bound_table = []
        for n in range(n_act - 1):
            phi = phi_list[n]
            z = Neg(log_derivative_expr(phi))
            z_jets = [z]
            for _ in range(max(0, bound_orders - 2)):
                z_jets.append(diff(z_jets[-1]))
            window = [t for t in fine if a[n + 1] <= t <= b[n + 1]]
            gn = g_tables[n]
            worst = {k: mpf(0) for k in range(1, bound_orders + 1)}
            cross = mpf(0)
            for t in window:
                u = gn[t] - gn[a[n + 1]]
                phi_jet = _jet_of(phi, t, bound_orders)
                beta_jet = _beta_jet(u, phi_jet, bound_orders)
                zv = [_mid(zj, t) for zj in z_jets]
                for k in range(1, bound_orders + 1):
                    total = mpf(0)
                    for j in range(1, k + 1):
                        total += R[k][j].evaluate(zv) * beta_jet[j]
                    val = total / phi_jet[0] ** k
                    worst[k] = max(worst[k], abs(val))
                    expected = (mollifier.bump_derivative(u, k)
                                if 0 < u < 1 else mpf(0))
                    cross = max(cross, abs(val - expected))
            for k in range(1, bound_orders + 1):
                if worst[k] > c_table[k]:
                    raise PartitionError(
                        "rescaled derivative bound failed: |delta_%d^%d beta| "
                        "= %s > C_%d = %s" % (n, k, mp.nstr(worst[k], 8), k,
                                              mp.nstr(c_table[k], 8)))
            bound_table.append({
                "overlap": n,
                "max_rescaled": {k: mp.nstr(worst[k], 10) for k in worst},
                "cross_check_defect": mp.nstr(cross, 6),
            })
        meta = {
            "tag": "admissible_partition",
            "actives": [repr(p) for p in phi_list],
            "overlap_residual": mp.nstr(residual, 8),
        }
        return AdmissiblePartition(a, b, betas, list(phi_list), c_table,
                                   residual, bound_table, meta)


def _snap(q):
    """Round a rational up to a coarse grid to keep schedules printable."""
    return Fraction(int(mp.ceil(mpf_from_fraction(Fraction(q)) * 1024)), 1024)


def _cumulative_g_nodes(phi, nodes, prec):
    out = {}
    acc = mpf(0)
    prev = nodes[0]
    base = Fraction(1)
    v, _ = quadrature.integrate(lambda s: _phi_value_mpf(phi, s, prec),
                                mpf_from_fraction(base), mpf_from_fraction(prev),
                                tol=mpf(2) ** -48, max_depth=20)
    acc = v
    out[prev] = acc
    for t in nodes[1:]:
        v, _ = quadrature.integrate(lambda s: _phi_value_mpf(phi, s, prec),
                                    mpf_from_fraction(prev), mpf_from_fraction(t),
                                    tol=mpf(2) ** -48, max_depth=20)
        acc += v
        out[t] = acc
        prev = t
    return out


def _mid(expr, t, prec=_PREC):
    lo, hi = eval_interval_raw(expr, t, prec)
    return (lo.to_mpf() + hi.to_mpf()) / 2


def _jet_of(phi, t, m):
    jet = []
    cur = phi
    for _ in range(m + 1):
        jet.append(_mid(cur, t))
        cur = diff(cur)
    return jet


def _beta_jet(u, phi_jet, m):
    """Derivatives of alpha(g(t) - const) to order m via the chain rule.

    g' = phi, so the inner jet is (phi, phi', phi'', ...); orders up to 4.
    """
    a = [mollifier.bump(u)]
    for k in range(1, m + 1):
        a.append(mollifier.bump_derivative(u, k) if 0 < u < 1 else mpf(0))
    p = phi_jet
    out = [a[0]]
    if m >= 1:
        out.append(a[1] * p[0])
    if m >= 2:
        out.append(a[2] * p[0] ** 2 + a[1] * p[1])
    if m >= 3:
        out.append(a[3] * p[0] ** 3 + 3 * a[2] * p[0] * p[1] + a[1] * p[2])
    if m >= 4:
        out.append(a[4] * p[0] ** 4 + 6 * a[3] * p[0] ** 2 * p[1]
                   + a[2] * (3 * p[1] ** 2 + 4 * p[0] * p[2]) + a[1] * p[3])
    return out


def blend_functions(phi_columns, partition):
    """Blend Phi = sum beta_n Phi_n over the partition grid.

    Each column must cover the support of its beta; on every overlap the
    blend stays between the two inputs being mixed.
    """
    if len(phi_columns) != len(partition):
        raise PartitionError("need one column per partition member")
    a, b = partition.a_schedule, partition.b_schedule
    # the weights sum to one from b_0 on; the blend lives there
    full_grid = partition.betas[0].grid
    keep = [i for i, t in enumerate(full_grid) if t >= b[0]]
    grid = [full_grid[i] for i in keep]
    with workprec(_PREC):
        for n, col in enumerate(phi_columns):
            lo_need = a[n]
            hi_need = b[n + 1] if n + 1 < len(b) and b[n + 1] is not None else grid[-1]
            s0, s1 = col.span()
            if s0 > lo_need or s1 < hi_need:
                raise PartitionError(
                    "column %d does not cover the support [%s, %s]"
                    % (n, lo_need, hi_need))
        values = []
        for gi, i in enumerate(keep):
            t = full_grid[i]
            total = mpf(0)
            for n, col in enumerate(phi_columns):
                w = partition.betas[n].values[i].to_mpf()
                if w != 0:
                    total += w * col.interp(t).to_mpf()
            values.append(total)
        out = GridFunction(grid, [TV(v) for v in values], None, {
            "tag": "partition_blend",
            "sub_horizon_start": str(b[0]),
        })
        for n in range(len(phi_columns) - 1):
            for gi, i in enumerate(keep):
                t = full_grid[i]
                if a[n + 1] <= t <= b[n + 1]:
                    x = phi_columns[n].interp(t).to_mpf()
                    y = phi_columns[n + 1].interp(t).to_mpf()
                    v = values[gi]
                    if not (min(x, y) - mpf(2) ** -60 <= v <= max(x, y) + mpf(2) ** -60):
                        raise PartitionError(
                            "blend escapes its input envelope at t=%s" % t)
        return out
