"""Hierarchical shifted grid and the bottom-up update driver.

Level 0 is the whole space [0,N]^d.  A cell at level l >= 1 has side N/2^(l-1)
and is shifted by the offset a in every dimension, then clipped to [0,N]^d.
Each cube gets a level from its edge length and lives in the unique cell of
that level containing it, if one exists; otherwise it sits in a side pool and
this grid instance ignores it.  An engine rebuilds only the cells on the
changed object's chain, from the deepest one up to the root.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from .geometry import Box, ContractError, validate_box
from .range_index import BoxIndex, WeightedPointIndex

ENSEMBLE_CAP = 256


def snap_space(N: float) -> int:
    """Round N up to a power of two."""
    if N < 2:
        return 2
    return 1 << (math.ceil(N) - 1).bit_length()


def snap_eps(eps: float) -> float:
    """Round eps down to 1/2^t with t >= 1."""
    if not 0 < eps < 1:
        raise ContractError("epsilon must lie in (0, 1)")
    t = max(1, math.ceil(-math.log2(eps) - 1e-12))
    return 2.0 ** -t


@dataclass(frozen=True)
class GridConfig:
    N: int
    d: int
    eps: float
    offset: float = 0.0
    mode: str = "deterministic"

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ContractError("N must be a power of two")
        inv = 1.0 / self.eps
        if inv != int(inv) or int(inv) & (int(inv) - 1) or inv < 2:
            raise ContractError("1/eps must be a power of two, at least 2")
        if not 0 <= self.offset < self.N:
            raise ContractError("offset must lie in [0, N)")
        if self.d < 1:
            raise ContractError("dimension must be positive")

    @classmethod
    def snapped(cls, N, d, eps, offset=0.0, mode="deterministic"):
        return cls(snap_space(N), d, snap_eps(eps), offset, mode)

    @property
    def log_n(self) -> int:
        return self.N.bit_length() - 1

    def side(self, level: int) -> float:
        return float(self.N) if level == 0 else self.N / 2.0 ** (level - 1)

    def with_offset(self, a: float) -> "GridConfig":
        return GridConfig(self.N, self.d, self.eps, a, self.mode)


class CellId(NamedTuple):
    level: int
    k: tuple


def root_cell(cfg: GridConfig) -> CellId:
    return CellId(0, (0,) * cfg.d)


def level_of(size: float, cfg: GridConfig) -> int:
    """Level whose bracket [eps N/(d 2^(l-1)), 2 eps N/(d 2^(l-1))) holds the edge length."""
    if isinstance(size, Box):
        size = size.size
    base = cfg.eps * cfg.N / cfg.d
    if size >= base:
        return 0
    for level in range(1, cfg.log_n + 1):
        low = base / 2.0 ** (level - 1)
        if low <= size < 2 * low:
            return level
    raise ContractError(f"edge length {size} is below every level bracket")


def cell_bounds(cell: CellId, cfg: GridConfig) -> tuple:
    if cell.level == 0:
        return (0.0,) * cfg.d, (float(cfg.N),) * cfg.d
    side = cfg.side(cell.level)
    lo = tuple(max(0.0, cfg.offset + k * side) for k in cell.k)
    hi = tuple(min(float(cfg.N), cfg.offset + (k + 1) * side) for k in cell.k)
    return lo, hi


def cell_of_point(level: int, p: Sequence[float], cfg: GridConfig) -> CellId:
    if level == 0:
        return root_cell(cfg)
    side = cfg.side(level)
    return CellId(level, tuple(math.floor((v - cfg.offset) / side) for v in p))


def parent(cell: CellId, cfg: GridConfig) -> Optional[CellId]:
    if cell.level == 0:
        return None
    if cell.level == 1:
        return root_cell(cfg)
    return CellId(cell.level - 1, tuple(k // 2 for k in cell.k))


def children(cell: CellId, cfg: GridConfig) -> list:
    """Nonempty child cells, in a fixed order."""
    if cell.level >= cfg.log_n:
        return []
    if cell.level == 0:
        options = [(-1, 0)] * cfg.d
    else:
        options = [(2 * k, 2 * k + 1) for k in cell.k]
    out = []
    for ks in _product(options):
        c = CellId(cell.level + 1, ks)
        lo, hi = cell_bounds(c, cfg)
        if all(h > l for l, h in zip(lo, hi)):
            out.append(c)
    return out


def _product(options):
    result = [()]
    for opt in options:
        result = [r + (o,) for r in result for o in opt]
    return result


def cell_chain(box: Box, cfg: GridConfig) -> list:
    """Cells from the box's own level down to the root, or [] if it straddles its cell."""
    level = level_of(box.size, cfg)
    if level == 0:
        return [root_cell(cfg)]
    cell = cell_of_point(level, box.lo, cfg)
    lo, hi = cell_bounds(cell, cfg)
    if any(bh > h for bh, h in zip(box.hi, hi)) or any(bl < l for bl, l in zip(box.lo, lo)):
        return []
    chain = [cell]
    while cell.level > 0:
        cell = parent(cell, cfg)
        chain.append(cell)
    return chain


# -------------------------------------------------------------------------
# offsets


def offset_params(d: int, eps: float) -> tuple:
    """(K, count of r values per a') for the deterministic offset family."""
    K = int(round(math.log2(2 * d / eps)))
    inv = int(round(1 / eps))
    count = d * 2 ** (K * inv - K + 1) * inv
    return K, count


def _delta_sum(a_prime: int, cfg: GridConfig) -> float:
    K, _ = offset_params(cfg.d, cfg.eps)
    inv = int(round(1 / cfg.eps))
    total = 0.0
    for j in range(-1, cfg.log_n + 1):
        exp = a_prime * K + (j + 1) * K * inv - K + 1
        total += cfg.eps * cfg.N / (cfg.d * 2.0 ** exp)
    return total


def offset_value(a_prime: int, r: int, cfg: GridConfig) -> float:
    """a_r for a given level shift a'; reduced mod N since every shifted level is N-periodic."""
    return math.fmod(r * _delta_sum(a_prime, cfg), cfg.N)


def build_offsets(cfg: GridConfig, cap: int = ENSEMBLE_CAP) -> list:
    """The full deterministic offset family, deduplicated and sorted."""
    _, count = offset_params(cfg.d, cfg.eps)
    inv = int(round(1 / cfg.eps))
    if count * inv > cap:
        raise ContractError(
            f"deterministic ensemble has {count * inv} offsets (cap {cap}); use random:<count>")
    values = {offset_value(ap, r, cfg) for ap in range(inv) for r in range(count)}
    return sorted(values)


def sample_offsets(cfg: GridConfig, count: int, seed: int = 0) -> list:
    """Uniform draws from the offset family without materializing it."""
    rng = random.Random(seed)
    _, per = offset_params(cfg.d, cfg.eps)
    inv = int(round(1 / cfg.eps))
    values = []
    for _ in range(count):
        v = offset_value(rng.randrange(inv), rng.randrange(per), cfg)
        if v not in values:
            values.append(v)
    return values


# -------------------------------------------------------------------------
# weight classes


def weight_class(w: float, eps: float) -> int:
    """k with (1+eps)^k <= w < (1+eps)^(k+1)."""
    step = math.log1p(eps)
    k = math.floor(math.log(w) / step)
    while class_floor(k + 1, eps) <= w:
        k += 1
    while class_floor(k, eps) > w:
        k -= 1
    return k


def class_floor(k: int, eps: float) -> float:
    return math.exp(k * math.log1p(eps)) if k else 1.0


# -------------------------------------------------------------------------
# framework


@dataclass
class CellState:
    cell: CellId
    lo: tuple
    hi: tuple
    count: int = 0
    all: Optional[BoxIndex] = None
    assigned: Optional[BoxIndex] = None
    class_all: dict = field(default_factory=dict)
    class_assigned: dict = field(default_factory=dict)
    payload: object = None
    points: Optional[WeightedPointIndex] = None
    bar: list = field(default_factory=list)
    tilde: list = field(default_factory=list)
    version: int = 0


class GridEngine:
    """One grid instance for a fixed offset.  Subclasses supply rebuild_cell."""

    needs: frozenset = frozenset()
    cube_input = True
    weighted = False

    def __init__(self, cfg: GridConfig):
        self.cfg = cfg
        self.registry: dict = {}
        self.objects: dict = {}
        self.chains: dict = {}
        self.pool: dict = {}
        self.W = 1.0
        self.rebuilt_last: list = []
        self.anomalies: list = []
        self._kids: dict = {}

    # -- public update API --------------------------------------------------

    def insert(self, box: Box) -> None:
        self.handle_update("insert", box)

    def delete(self, box) -> None:
        ident = box.id if isinstance(box, Box) else box
        if ident not in self.objects:
            raise ContractError(f"delete of unknown id {ident}")
        self.handle_update("delete", self.objects[ident])

    def handle_update(self, action: str, box: Box) -> None:
        chain = self._register(action, box)
        self.rebuilt_last = []
        if chain:
            self._rebuild_chain(chain)

    def load(self, boxes: Iterable[Box]) -> None:
        """Offline build on an empty engine; same result as inserting one by one."""
        if self.objects:
            raise ContractError("load needs an empty engine")
        touched = set()
        for box in boxes:
            touched.update(self._register("insert", box, sync=False))
        for cell in sorted(touched, key=lambda c: -c.level):
            self._refresh(cell)

    # -- internals -------------------------------------------------------------

    def _register(self, action, box, sync=True) -> list:
        if action == "insert":
            validate_box(box, self.cfg.N, cube=self.cube_input)
            if box.dim != self.cfg.d:
                raise ContractError("box dimension does not match the engine")
            if box.id in self.objects:
                raise ContractError(f"duplicate id {box.id}")
            self.W = max(self.W, box.weight)
            chain = cell_chain(box, self.cfg)
            self.objects[box.id] = box
            self.chains[box.id] = chain
        elif action == "delete":
            if box.id not in self.objects:
                raise ContractError(f"delete of unknown id {box.id}")
            box = self.objects.pop(box.id)
            chain = self.chains.pop(box.id)
        else:
            raise ContractError(f"unknown action {action!r}")
        if not chain:
            if action == "insert":
                self.pool[box.id] = box
            else:
                self.pool.pop(box.id)
            return []
        if sync:
            self.before_update(chain)
        for cell in chain:
            state = self.registry.get(cell)
            if state is None:
                lo, hi = cell_bounds(cell, self.cfg)
                state = self.registry[cell] = CellState(cell, lo, hi)
                self.on_create(state)
            self._edit_indexes(state, action, box, own=cell is chain[0])
        return chain

    def _edit_indexes(self, state: CellState, action: str, box: Box, own: bool) -> None:
        state.count += 1 if action == "insert" else -1
        needs = self.needs
        k = weight_class(box.weight, self.cfg.eps) if ("class_all" in needs or "class_assigned" in needs) else None
        targets = []
        if "all" in needs:
            if state.all is None:
                state.all = BoxIndex(self.cfg.d)
            targets.append(state.all)
        if "class_all" in needs:
            targets.append(state.class_all.setdefault(k, BoxIndex(self.cfg.d)))
        if own:
            if "assigned" in needs:
                if state.assigned is None:
                    state.assigned = BoxIndex(self.cfg.d)
                targets.append(state.assigned)
            if "class_assigned" in needs:
                targets.append(state.class_assigned.setdefault(k, BoxIndex(self.cfg.d)))
        for idx in targets:
            idx.box_edit(action, box)
        if action == "delete" and k is not None:
            for table in (state.class_all, state.class_assigned):
                if k in table and table[k].is_empty:
                    del table[k]

    def _rebuild_chain(self, chain: list) -> None:
        for cell in chain:
            self._refresh(cell)

    def _refresh(self, cell: CellId) -> None:
        state = self.registry[cell]
        if state.count == 0:
            self.on_remove(state)
            del self.registry[cell]
            return
        self.rebuild_cell(state, self.child_states(state))
        state.version += 1
        self.rebuilt_last.append(cell)

    def child_states(self, state: CellState) -> list:
        kids = self._kids.get(state.cell)
        if kids is None:
            kids = self._kids[state.cell] = children(state.cell, self.cfg)
        return [self.registry[c] for c in kids if c in self.registry]

    def assigned_boxes(self, state: CellState) -> list:
        if state.assigned is not None:
            return state.assigned.in_size_order()
        return sorted((b for b in self.objects.values()
                       if self.chains[b.id] and self.chains[b.id][0] == state.cell),
                      key=lambda b: (b.size, b.id))

    @property
    def root(self) -> Optional[CellState]:
        return self.registry.get(root_cell(self.cfg))

    # -- hooks -------------------------------------------------------------------

    def before_update(self, chain: list) -> None:
        pass

    def on_create(self, state: CellState) -> None:
        pass

    def on_remove(self, state: CellState) -> None:
        pass

    def rebuild_cell(self, state: CellState, kids: list) -> None:
        raise NotImplementedError

    def value(self) -> float:
        raise NotImplementedError

    def solution(self) -> list:
        raise NotImplementedError


class Ensemble:
    """Independent engines over several offsets; reports the best one."""

    def __init__(self, factory: Callable[[GridConfig], GridEngine], cfg: GridConfig, offsets: Sequence[float]):
        if not offsets:
            raise ContractError("an ensemble needs at least one offset")
        self.cfg = cfg
        self.engines = [factory(cfg.with_offset(a)) for a in offsets]

    @classmethod
    def from_policy(cls, factory, cfg: GridConfig, policy: str = "ensemble", seed: int = 0):
        if policy == "ensemble":
            offsets = build_offsets(cfg)
        elif policy.startswith("random:"):
            offsets = sample_offsets(cfg, int(policy.split(":", 1)[1]), seed)
        else:
            raise ContractError(f"unknown offset policy {policy!r}")
        return cls(factory, cfg, offsets)

    def insert(self, box: Box) -> None:
        for e in self.engines:
            e.insert(box)

    def delete(self, box) -> None:
        for e in self.engines:
            e.delete(box)

    def load(self, boxes: Iterable[Box]) -> None:
        boxes = list(boxes)
        for e in self.engines:
            e.load(boxes)

    def best(self) -> GridEngine:
        return max(self.engines, key=lambda e: e.value())

    def value(self) -> float:
        return self.best().value()

    def solution(self) -> list:
        return self.best().solution()
