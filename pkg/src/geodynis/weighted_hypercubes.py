"""Dynamic (4+O(eps))2^d-approximate maximum-weight independent set of hypercubes.

Every cell keeps a weighted point set P(Q): the corners of all cubes selected
anywhere inside Q during the current epoch, each carrying its cube's weight.
A cube is worth adding when its weight class is at least twice the P-weight of
some grid-aligned box around it.  The grid lines come from a per-cell
auxiliary grid that caps the P-weight of every open slice.  Selected cubes
evict the ones they overlap from the cell's current selection.  Their corners
stay in P, so the total weight of P at the root estimates the optimum.

An update first withdraws everything the changed chain selected in the last
epoch, then rebuilds the chain bottom-up.

The first addible cube in (size, id) order is found by checking, for every
assigned cube, the smallest aligned closed box around it.  Weights only grow
with the box, so this is the same cube the full aligned-box enumeration finds.
That enumeration is kept as strategy "aligned".
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .geometry import Box, ContractError, intersects_open, intersects_region, vertices
from .grid import CellState, Ensemble, GridConfig, GridEngine, class_floor, parent, weight_class
from .range_index import BoxIndex, WeightedPointIndex


@dataclass
class AuxGrid:
    z: list
    base_weight: float
    cap: float


@dataclass
class WHRebuildLog:
    selected: list = field(default_factory=list)
    iterations: int = 0
    capped: bool = False


def slice_cap(cfg: GridConfig, base_weight: float) -> float:
    d = cfg.d
    return cfg.eps ** (d + 2) * base_weight / (d ** (d + 1) * cfg.log_n)


def grid_lines(points: WeightedPointIndex, axis: int, lo: float, hi: float, cap: float) -> list:
    """Cut [lo, hi] so every open slice along `axis` carries weight <= cap.

    Each new line is the first coordinate c where the weight of (previous, c]
    exceeds the cap, found by binary search over prefix weights.
    """
    pts, w = point_arrays(points)
    return _lines(pts[:, axis], w, lo, hi, cap)


def point_arrays(points: WeightedPointIndex) -> tuple:
    items = points.items()
    pts = np.array([p for p, _ in items], dtype=float).reshape(-1, points.dim)
    return pts, np.array([v for _, v in items], dtype=float)


def _lines(coords: np.ndarray, weights: np.ndarray, lo: float, hi: float, cap: float) -> list:
    if not len(coords):
        return [lo, hi]
    keys, inv = np.unique(coords, return_inverse=True)
    mass = np.bincount(inv.reshape(-1), weights=weights, minlength=len(keys))
    prefix = np.cumsum(mass)
    lines = [lo]
    z = lo
    while True:
        start = int(np.searchsorted(keys, z, "right"))
        base = prefix[start - 1] if start > 0 else 0.0
        # smallest index i >= start with prefix[i] - base > cap
        i = int(np.searchsorted(prefix, base + cap, "right"))
        i = max(i, start)
        if i >= len(keys) or keys[i] >= hi:
            break
        z = float(keys[i])
        lines.append(z)
    lines.append(hi)
    return lines


def build_aux_grid(points: WeightedPointIndex, cfg: GridConfig, lo, hi, arrays=None) -> AuxGrid:
    base = points.total_weight
    cap = slice_cap(cfg, base)
    pts, w = arrays if arrays is not None else point_arrays(points)
    z = [_lines(pts[:, j], w, lo[j], hi[j], cap) for j in range(cfg.d)]
    return AuxGrid(z, base, cap)


def closed_box_weights(pts: np.ndarray, w: np.ndarray, los: np.ndarray, his: np.ndarray) -> np.ndarray:
    """Weight of the points inside each closed box [los[i], his[i]]."""
    if not len(pts) or not len(los):
        return np.zeros(len(los))
    inside = np.all((pts[None, :, :] >= los[:, None, :]) & (pts[None, :, :] <= his[:, None, :]), axis=2)
    return inside @ w


def check_aux_grid(grid: AuxGrid, points: WeightedPointIndex, cfg: GridConfig, lo, hi) -> list:
    """Problems with a constructed grid; empty when all three contract bullets hold."""
    problems = []
    d = cfg.d
    bound = d ** (d + 1) * cfg.log_n / cfg.eps ** (d + 2) + 1
    tol = 1e-9 * max(1.0, grid.base_weight)
    for j, z in enumerate(grid.z):
        if z[0] != lo[j] or z[-1] != hi[j]:
            problems.append(("bounds", j))
        if len(z) > bound:
            problems.append(("count", j, len(z)))
        for a, b in zip(z, z[1:]):
            slab_lo = [-math.inf] * d
            slab_hi = [math.inf] * d
            slab_lo[j], slab_hi[j] = a, b
            open_flags = ["closed"] * d
            open_flags[j] = "open"
            w = points.range_weight(slab_lo, slab_hi, open_flags)
            if w > grid.cap + tol:
                problems.append(("slice", j, a, b, w))
    return problems


class WeightedHypercubeEngine(GridEngine):
    weighted = True

    def __init__(self, cfg: GridConfig, strategy: str = "sweep"):
        if strategy not in ("sweep", "aligned"):
            raise ContractError(f"unknown strategy {strategy!r}")
        super().__init__(cfg)
        self.strategy = strategy
        self.needs = frozenset({"assigned", "class_assigned"} if strategy == "aligned" else {"assigned"})
        self.dbar = BoxIndex(cfg.d)
        self.bar_below: dict = {}
        self.logs: dict = {}
        self.grids: dict = {}
        self.keep_grids = False

    # -- epoch handling ------------------------------------------------------------

    def on_create(self, state: CellState) -> None:
        state.points = WeightedPointIndex(self.cfg.d)

    def before_update(self, chain: list) -> None:
        for i, cell in enumerate(chain):
            state = self.registry.get(cell)
            if state is None:
                continue
            for cube in state.tilde:
                self._spread(cube, chain[i:], -1.0)
            self._drop_bar(state)
            state.tilde = []

    def _drop_bar(self, state: CellState) -> None:
        for cube in state.bar:
            self.dbar.delete(cube)
        self._count_bar(state.cell, -len(state.bar))
        state.bar = []

    def _count_bar(self, cell, delta: int) -> None:
        # C-bar members in each subtree, so the output descent can skip empty ones
        if not delta:
            return
        while cell is not None:
            left = self.bar_below.get(cell, 0) + delta
            if left:
                self.bar_below[cell] = left
            else:
                self.bar_below.pop(cell, None)
            cell = parent(cell, self.cfg)

    def _spread(self, cube: Box, cells, sign: float) -> None:
        corners = vertices(cube)
        for cell in cells:
            self.registry[cell].points.add_weights(corners, sign * cube.weight)

    def _ancestors(self, cell):
        out = []
        while cell is not None:
            out.append(cell)
            cell = parent(cell, self.cfg)
        return out

    def background_sync(self, origin, cube: Box, sign: float) -> None:
        self._spread(cube, self._ancestors(origin), sign)

    # -- rebuild ---------------------------------------------------------------------

    def iteration_cap(self) -> int:
        d, eps = self.cfg.d, self.cfg.eps
        classes = math.log(max(self.W, 1.0)) / math.log1p(eps) + 1
        return int(math.ceil((d / eps) ** d * classes))

    def rebuild_cell(self, state: CellState, kids: list) -> None:
        self._drop_bar(state)
        state.tilde = []
        log = WHRebuildLog()
        self.logs[state.cell] = log
        cubes = self.assigned_boxes(state)
        if not cubes:
            return
        # P(Q) changes during this rebuild only by the corners of the picks
        pts, pw = point_arrays(state.points)
        grid = build_aux_grid(state.points, self.cfg, state.lo, state.hi, (pts, pw))
        if self.keep_grids:
            self.grids[state.cell] = (grid, check_aux_grid(grid, state.points, self.cfg, state.lo, state.hi))
        z = [list(col) for col in grid.z]
        ancestors = self._ancestors(state.cell)
        floors = np.array([class_floor(weight_class(c.weight, self.cfg.eps), self.cfg.eps) for c in cubes])
        los = np.array([c.lo for c in cubes])
        his = np.array([c.hi for c in cubes])
        cap = self.iteration_cap()
        if self.strategy == "sweep":
            a_lo, a_hi = self._enclosing(z, los, his)
            w = closed_box_weights(pts, pw, a_lo, a_hi)
        while True:
            if log.iterations >= cap:
                log.capped = True
                self.anomalies.append(("whc-iteration-cap", state.cell, log.iterations))
                break
            if self.strategy == "sweep":
                ok = np.flatnonzero(floors >= 2.0 * w)
                pick = cubes[int(ok[0])] if len(ok) else None
            else:
                pick = self._aligned_addible(state, z)
            if pick is None:
                break
            log.iterations += 1
            self._select(state, pick, ancestors, z)
            log.selected.append(pick)
            if self.strategy == "sweep":
                # only boxes whose bounds moved need a fresh query; the rest gain
                # whatever part of the new cube's corners they contain
                n_lo, n_hi = self._enclosing(z, los, his)
                moved = np.any((n_lo != a_lo) | (n_hi != a_hi), axis=1)
                corners = np.array(vertices(pick))
                pts = np.vstack([pts, corners])
                pw = np.concatenate([pw, np.full(len(corners), pick.weight)])
                inside = np.all((corners[None, :, :] >= n_lo[:, None, :])
                                & (corners[None, :, :] <= n_hi[:, None, :]), axis=2)
                w = w + pick.weight * inside.sum(axis=1)
                if moved.any():
                    w[moved] = closed_box_weights(pts, pw, n_lo[moved], n_hi[moved])
                a_lo, a_hi = n_lo, n_hi

    def _enclosing(self, z, los, his) -> tuple:
        """Smallest closed aligned box around each cube."""
        a_lo = np.empty_like(los)
        a_hi = np.empty_like(his)
        for j in range(self.cfg.d):
            zj = np.asarray(z[j])
            a_lo[:, j] = zj[np.searchsorted(zj, los[:, j], "right") - 1]
            a_hi[:, j] = zj[np.searchsorted(zj, his[:, j], "left")]
        return a_lo, a_hi

    def _aligned_addible(self, state, z):
        best = None
        pairs = [list(combinations(col, 2)) for col in z]
        for combo in product(*pairs):
            lo = tuple(p[0] for p in combo)
            hi = tuple(p[1] for p in combo)
            w_a = state.points.range_weight(lo, hi, "closed")
            for k, idx in state.class_assigned.items():
                if class_floor(k, self.cfg.eps) < 2.0 * w_a:
                    continue
                cube = idx.smallest_contained(lo, hi)
                if cube is not None and (best is None or (cube.size, cube.id) < (best.size, best.id)):
                    best = cube
        return best

    def _select(self, state: CellState, cube: Box, ancestors, z) -> None:
        keep = []
        for other in state.bar:
            if intersects_open(other, cube):
                self.dbar.delete(other)
            else:
                keep.append(other)
        self._count_bar(state.cell, len(keep) + 1 - len(state.bar))
        state.bar = keep + [cube]
        state.tilde.append(cube)
        self.dbar.insert(cube)
        self._spread(cube, ancestors, 1.0)
        for j in range(self.cfg.d):
            for v in (cube.lo[j], cube.hi[j]):
                pos = bisect.bisect_left(z[j], v)
                if pos == len(z[j]) or z[j][pos] != v:
                    z[j].insert(pos, v)

    # -- output ------------------------------------------------------------------------

    def weight_estimate(self) -> float:
        root = self.root
        return 0.0 if root is None else root.points.total_weight

    def value(self) -> float:
        return self.weight_estimate()

    def solution(self) -> list:
        root = self.root
        if root is None:
            return []
        out = []
        stack = [(root.cell, [])]
        while stack:
            cell, blockers = stack.pop()
            state = self.registry[cell]
            local = [b for b in blockers if intersects_region(b, state.lo, state.hi)]
            emitted = [c for c in state.bar if not any(intersects_open(c, b) for b in local)]
            out.extend(emitted)
            passed = local + emitted
            for kid in self.child_states(state):
                if kid.cell in self.bar_below:
                    stack.append((kid.cell, passed))
        return out

    def emitted_weight(self) -> float:
        return float(sum(c.weight for c in self.solution()))

    # -- audits ----------------------------------------------------------------------

    def point_consistency(self) -> list:
        """Cells whose P differs from the corners of the epoch selections below them."""
        expected: dict = {cell: {} for cell in self.registry}
        for cell, state in self.registry.items():
            for cube in state.tilde:
                for anc in self._ancestors(cell):
                    table = expected[anc]
                    for v in vertices(cube):
                        table[v] = table.get(v, 0.0) + cube.weight
        bad = []
        for cell, state in self.registry.items():
            got = dict(state.points.items())
            want = {k: v for k, v in expected[cell].items() if v != 0.0}
            if set(got) != set(want) or any(abs(got[k] - want[k]) > 1e-9 * max(1.0, want[k]) for k in want):
                bad.append(cell)
        return bad

    def point_sol_gap(self) -> float:
        """2^(d+1) w(SOL) - w(P(root)); never negative when the bound holds."""
        return 2 ** (self.cfg.d + 1) * self.emitted_weight() - self.weight_estimate()


def wh_ensemble(cfg: GridConfig, offsets, strategy: str = "sweep") -> Ensemble:
    return Ensemble(lambda c: WeightedHypercubeEngine(c, strategy), cfg, offsets)
