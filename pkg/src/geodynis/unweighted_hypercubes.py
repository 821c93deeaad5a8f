"""Dynamic (1+eps)2^d-approximate maximum independent set of hypercubes.

A sparse cell copies its children's solutions and then greedily adds its own
cubes, smallest first, skipping any that overlap what is already chosen.  The
textbook search for the next cube enumerates every box spanned by the chosen
cubes' coordinates and asks the index for the smallest assigned cube inside a
free one.  Scanning the assigned cubes in size order and taking the first free
one gives the same cube: a cube avoids the chosen set exactly when some free
aligned box contains it.  The scan is the default.  The enumeration is kept as
"aligned" for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .geometry import Box, ContractError, intersects_region
from .grid import CellId, CellState, Ensemble, GridConfig, GridEngine


@dataclass
class UHCellSolution:
    kind: str
    cardinality: int
    explicit: list = field(default_factory=list)
    links: list = field(default_factory=list)
    added_sizes: list = field(default_factory=list)
    lo: object = None
    hi: object = None


def uh_threshold(cfg: GridConfig) -> float:
    d = cfg.d
    return d ** d * cfg.log_n / cfg.eps ** (d + 1)


def aligned_boxes(coords):
    """Every open product of coordinate pairs, one pair per dimension."""
    pairs = [list(combinations(sorted(set(z)), 2)) for z in coords]
    for combo in product(*pairs):
        yield tuple(p[0] for p in combo), tuple(p[1] for p in combo)


class OverlapSet:
    """Boxes with a vectorized open-overlap test.

    The starting members arrive as coordinate arrays in one piece; boxes added
    later go to a short tail list that is checked separately.
    """

    def __init__(self, d: int, boxes=(), lo=None, hi=None):
        self.d = d
        self.base = list(boxes)
        if lo is None:
            lo = np.array([b.lo for b in self.base], dtype=float).reshape(-1, d)
            hi = np.array([b.hi for b in self.base], dtype=float).reshape(-1, d)
        self._lo, self._hi = lo, hi
        self.tail: list = []

    @property
    def boxes(self) -> list:
        return self.base + self.tail

    def __len__(self):
        return len(self.base) + len(self.tail)

    def add(self, box: Box) -> None:
        self.tail.append(box)

    def arrays(self) -> tuple:
        if not self.tail:
            return self._lo, self._hi
        lo = np.vstack([self._lo, np.array([b.lo for b in self.tail])])
        hi = np.vstack([self._hi, np.array([b.hi for b in self.tail])])
        return lo, hi

    def any_hit(self, lo, hi) -> bool:
        """True when some member meets the open box (lo, hi)."""
        for b in self.tail:
            if intersects_region(b, lo, hi):
                return True
        if not len(self._lo):
            return False
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return bool(np.all((self._lo < hi) & (lo < self._hi), axis=1).any())


class UnweightedHypercubeEngine(GridEngine):
    needs = frozenset({"assigned"})

    def __init__(self, cfg: GridConfig, strategy: str = "sweep"):
        if strategy not in ("sweep", "aligned"):
            raise ContractError(f"unknown strategy {strategy!r}")
        super().__init__(cfg)
        self.strategy = strategy
        self.threshold = uh_threshold(cfg)
        self.max_additions = (cfg.d / cfg.eps) ** cfg.d

    def rebuild_cell(self, state: CellState, kids: list) -> None:
        union = sum(k.payload.cardinality for k in kids)
        if union > self.threshold:
            state.payload = UHCellSolution("linked", union, links=[k.cell for k in kids])
            return
        chosen = self._child_union(kids)
        added = []
        if state.assigned is not None and not state.assigned.is_empty:
            if self.strategy == "sweep":
                added = self._sweep(state.assigned.in_size_order(), chosen)
            else:
                while True:
                    cube = self._aligned_candidate(state, chosen)
                    if cube is None:
                        break
                    chosen.add(cube)
                    added.append(cube)
        if len(added) > self.max_additions:
            self.anomalies.append(("uhc-additions", state.cell, len(added)))
        lo, hi = chosen.arrays()
        state.payload = UHCellSolution("explicit", len(chosen), explicit=chosen.boxes,
                                       added_sizes=[c.size for c in added], lo=lo, hi=hi)

    def _child_union(self, kids: list) -> OverlapSet:
        boxes, los, his = [], [], []
        for k in kids:
            sol = k.payload
            if sol.kind == "linked":
                if sol.lo is None:
                    full = OverlapSet(self.cfg.d, self.expand(k.cell))
                    sol.explicit, (sol.lo, sol.hi) = full.boxes, full.arrays()
                boxes.extend(sol.explicit)
            else:
                boxes.extend(sol.explicit)
            los.append(sol.lo)
            his.append(sol.hi)
        if not kids:
            return OverlapSet(self.cfg.d)
        return OverlapSet(self.cfg.d, boxes, np.concatenate(los), np.concatenate(his))

    def _sweep(self, cands: list, chosen: OverlapSet) -> list:
        """Greedy in (size, id) order; each pick blocks every candidate it overlaps."""
        clo = np.array([c.lo for c in cands])
        chi = np.array([c.hi for c in cands])
        blocked = np.zeros(len(cands), dtype=bool)
        blo, bhi = chosen.arrays()
        for start in range(0, len(blo), 4096):
            l, h = blo[start:start + 4096], bhi[start:start + 4096]
            hit = np.all((clo[:, None, :] < h[None, :, :]) & (l[None, :, :] < chi[:, None, :]), axis=2)
            blocked |= hit.any(axis=1)
        added = []
        i = 0
        while True:
            free = np.flatnonzero(~blocked[i:])
            if not len(free):
                break
            i += int(free[0])
            cube = cands[i]
            chosen.add(cube)
            added.append(cube)
            blocked |= np.all((clo < chi[i]) & (clo[i] < chi), axis=1)
        return added

    def _aligned_candidate(self, state: CellState, chosen: OverlapSet):
        coords = [{state.lo[j], state.hi[j]} for j in range(self.cfg.d)]
        for b in chosen.boxes:
            for j in range(self.cfg.d):
                coords[j].update((b.lo[j], b.hi[j]))
        best = None
        for lo, hi in aligned_boxes(coords):
            if chosen.any_hit(lo, hi):
                continue
            cube = state.assigned.smallest_contained(lo, hi)
            if cube is not None and (best is None or (cube.size, cube.id) < (best.size, best.id)):
                best = cube
        return best

    def value(self) -> float:
        root = self.root
        return 0 if root is None else root.payload.cardinality

    def expand(self, cell: CellId) -> list:
        out = []
        stack = [cell]
        while stack:
            sol = self.registry[stack.pop()].payload
            if sol.kind == "explicit":
                out.extend(sol.explicit)
            else:
                stack.extend(reversed(sol.links))
        return out

    def solution(self) -> list:
        root = self.root
        return [] if root is None else self.expand(root.cell)

    def report(self) -> tuple:
        return self.value(), self.solution()

    def audit(self) -> list:
        return [c for c, s in self.registry.items() if s.payload.cardinality != len(self.expand(c))]


def uh_ensemble(cfg: GridConfig, offsets, strategy: str = "sweep") -> Ensemble:
    return Ensemble(lambda c: UnweightedHypercubeEngine(c, strategy), cfg, offsets)

