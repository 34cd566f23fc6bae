"""Finite-horizon grid functions with log-depth values.

The stand-in for a germ on a finite window: a strictly increasing rational
grid, one log-depth value per node, optional derivative columns, and a meta
block recording how the function was built.  CSV columns are
``t,depth,mantissa[,d1,d2,...]``; the JSON form carries the meta block.
"""

from __future__ import annotations

import json
from fractions import Fraction

import mpmath as mp
from mpmath import mpf

from .numeric import TV, TowerValue, mpf_from_fraction

__all__ = ["GridFunction", "GridError"]


class GridError(ValueError):
    pass


def _tv_to_cell(v):
    if v.sign == 0:
        return 0, "0"
    m = mp.nstr(v.sign * v.mant, int(mp.mp.dps) + 2, strip_zeros=False)
    return v.depth, m


def _tv_from_cell(depth, text):
    depth = int(depth)
    m = mpf(text)
    if m == 0 and depth == 0:
        return TowerValue.zero()
    sign = 1 if m > 0 else -1
    if depth == 0:
        return TV(m)
    return TowerValue(sign, depth, abs(m))


class GridFunction:
    """Immutable-by-convention sampled function on a strictly increasing grid."""

    def __init__(self, grid, values, derivatives=None, meta=None):
        grid = [Fraction(t) for t in grid]
        if len(grid) < 2:
            raise GridError("a grid needs at least two nodes")
        for a, b in zip(grid, grid[1:]):
            if not a < b:
                raise GridError("grid is not strictly increasing at %s" % b)
        values = [TV(v) for v in values]
        if len(values) != len(grid):
            raise GridError("value column length %d != grid length %d"
                            % (len(values), len(grid)))
        self.grid = grid
        self.values = values
        self.derivatives = {}
        if derivatives:
            for order, col in sorted(derivatives.items()):
                col = [TV(v) for v in col]
                if len(col) != len(grid):
                    raise GridError("derivative column %d has wrong length" % order)
                self.derivatives[int(order)] = col
        self.meta = dict(meta or {})

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_callable(fn, grid, meta=None, deriv_fns=None):
        grid = [Fraction(t) for t in grid]
        values = [fn(t) for t in grid]
        derivs = None
        if deriv_fns:
            derivs = {order: [dfn(t) for t in grid]
                      for order, dfn in deriv_fns.items()}
        return GridFunction(grid, values, derivs, meta)

    @staticmethod
    def uniform_grid(a, b, n):
        a, b = Fraction(a), Fraction(b)
        if not (a < b and n >= 2):
            raise GridError("bad uniform grid request")
        step = (b - a) / (n - 1)
        return [a + step * i for i in range(n)]

    # -- access ---------------------------------------------------------------

    def __len__(self):
        return len(self.grid)

    def span(self):
        return self.grid[0], self.grid[-1]

    def node_index(self, t):
        t = Fraction(t)
        lo, hi = 0, len(self.grid) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.grid[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def interp(self, t):
        """Piecewise-linear value at t inside the span (log-depth safe)."""
        t = Fraction(t)
        a, b = self.span()
        if t < a or t > b:
            raise GridError("point %s outside grid span [%s, %s]" % (t, a, b))
        i = self.node_index(t)
        if self.grid[i] == t or i == len(self.grid) - 1:
            return self.values[i]
        t0, t1 = self.grid[i], self.grid[i + 1]
        w = (t - t0) / (t1 - t0)
        return self.values[i].scale(1 - w) + self.values[i + 1].scale(w)

    def restrict(self, a, b, meta=None):
        a, b = Fraction(a), Fraction(b)
        idx = [i for i, t in enumerate(self.grid) if a <= t <= b]
        if len(idx) < 2:
            raise GridError("restriction keeps fewer than two nodes")
        return GridFunction(
            [self.grid[i] for i in idx],
            [self.values[i] for i in idx],
            {o: [col[i] for i in idx] for o, col in self.derivatives.items()},
            meta if meta is not None else self.meta)

    def with_meta(self, **extra):
        meta = dict(self.meta)
        meta.update(extra)
        return GridFunction(self.grid, self.values, self.derivatives, meta)

    def check_derivative_consistency(self, tolerance):
        """Central-difference check of each derivative column; worst defect."""
        worst = mpf(0)
        for order in sorted(self.derivatives):
            base = self.values if order == 1 else self.derivatives.get(order - 1)
            if base is None:
                continue
            col = self.derivatives[order]
            for i in range(1, len(self.grid) - 1):
                h1 = mpf_from_fraction(self.grid[i] - self.grid[i - 1])
                h2 = mpf_from_fraction(self.grid[i + 1] - self.grid[i])
                try:
                    y0 = base[i - 1].to_mpf()
                    y1 = base[i].to_mpf()
                    y2 = base[i + 1].to_mpf()
                    d = col[i].to_mpf()
                except Exception:
                    continue
                est = (y2 - y0) / (h1 + h2)
                scale = max(mpf(1), abs(d))
                worst = max(worst, abs(est - d) / scale)
        if worst > tolerance:
            raise GridError("derivative columns inconsistent with central "
                            "differences: defect %s > %s" % (worst, tolerance))
        return worst

    # -- serialization ---------------------------------------------------------

    def to_csv(self):
        orders = sorted(self.derivatives)
        header = "t,depth,mantissa"
        for o in orders:
            header += ",d%d" % o
        lines = [header]
        for i, t in enumerate(self.grid):
            depth, mant = _tv_to_cell(self.values[i])
            row = [str(t), str(depth), mant]
            for o in orders:
                d, m = _tv_to_cell(self.derivatives[o][i])
                row.append(m if d == 0 else "exp_%d:%s" % (d, m))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text, meta=None):
        lines = [ln for ln in text.strip().splitlines() if ln]
        header = lines[0].split(",")
        orders = [int(h[1:]) for h in header[3:]]
        grid, values = [], []
        derivs = {o: [] for o in orders}
        for ln in lines[1:]:
            cells = ln.split(",")
            grid.append(Fraction(cells[0]))
            values.append(_tv_from_cell(cells[1], cells[2]))
            for o, cell in zip(orders, cells[3:]):
                if cell.startswith("exp_"):
                    d, m = cell[4:].split(":")
                    derivs[o].append(_tv_from_cell(d, m))
                else:
                    derivs[o].append(_tv_from_cell(0, cell))
        return GridFunction(grid, values, derivs or None, meta)

    def to_json(self):
        payload = {
            "meta": self.meta,
            "csv": self.to_csv(),
        }
        return json.dumps(payload, indent=1, sort_keys=True, default=str)

    @staticmethod
    def from_json(text):
        payload = json.loads(text)
        return GridFunction.from_csv(payload["csv"], payload.get("meta"))

    def __repr__(self):
        a, b = self.span()
        return "GridFunction(%d nodes on [%s, %s], tag=%r)" % (
            len(self.grid), a, b, self.meta.get("tag"))
