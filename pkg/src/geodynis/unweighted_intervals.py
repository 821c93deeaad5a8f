"""Dynamic (1+eps)-approximate maximum independent set of intervals.

A cell whose children already hold many intervals in total just links to the
children.  Otherwise it solves its own interval set exactly with the
earliest-finish greedy, using successor queries.  Links cost O(1) to write and
the cached cardinality makes the size query O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Box, ContractError
from .grid import CellId, CellState, Ensemble, GridConfig, GridEngine
from .range_index import BoxIndex


@dataclass
class UICellSolution:
    kind: str
    cardinality: int
    explicit: list = field(default_factory=list)
    links: list = field(default_factory=list)


def ui_threshold(cfg: GridConfig) -> float:
    return cfg.log_n / cfg.eps ** 2


def greedy_exact_sub(idx: BoxIndex, start: float = float("-inf")) -> list:
    """Earliest-finish chain of disjoint intervals; optimal for the indexed set."""
    chosen = []
    t = start
    while True:
        nxt = idx.successor_interval(t)
        if nxt is None:
            return chosen
        chosen.append(nxt)
        t = nxt.hi[0]


class UnweightedIntervalEngine(GridEngine):
    needs = frozenset({"all"})

    def __init__(self, cfg: GridConfig):
        if cfg.d != 1:
            raise ContractError("unweighted intervals are one-dimensional")
        super().__init__(cfg)
        self.threshold = ui_threshold(cfg)

    def rebuild_cell(self, state: CellState, kids: list) -> None:
        union = sum(k.payload.cardinality for k in kids)
        if union > self.threshold:
            state.payload = UICellSolution("linked", union, links=[k.cell for k in kids])
        else:
            chosen = greedy_exact_sub(state.all, state.lo[0])
            state.payload = UICellSolution("explicit", len(chosen), explicit=chosen)

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
        """Cells whose cached cardinality disagrees with the expanded payload."""
        return [c for c, s in self.registry.items() if s.payload.cardinality != len(self.expand(c))]


def ui_ensemble(cfg: GridConfig, offsets) -> Ensemble:
    return Ensemble(UnweightedIntervalEngine, cfg, offsets)
