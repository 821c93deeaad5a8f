"""Weighted hyperrectangles via a dyadic split of the first axis.

A rectangle's class c is the coarsest dyadic level whose grid points N/2^c
stab its first-axis range [x, y).  Its group k is the index of that stabbing
point.  Rectangles in one group all share a stabbing point, so on the first
axis they pairwise overlap.  Only the remaining axes decide independence, and a
(d-1)-dimensional engine handles those.  Groups of the same class never overlap
one another.  So the union of the group solutions of one class is independent,
and the best class is within a log N factor of the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .geometry import Box, ContractError, validate_box
from .grid import Ensemble, GridConfig, build_offsets, sample_offsets
from .weighted_intervals import WeightedIntervalEngine


class ClassGroupKey(tuple):
    __slots__ = ()

    def __new__(cls, c: int, k: int):
        return super().__new__(cls, (c, k))

    @property
    def c(self) -> int:
        return self[0]

    @property
    def k(self) -> int:
        return self[1]


def classify_rect(box: Box, N: int) -> ClassGroupKey:
    """Minimal class c with a multiple m N/2^c (m >= 1) in [x, y); group k = m.

    The only range holding no positive multiple is [0, 1); it joins group
    (log N, 1), whose members all reach the point 1 and so sit next to it.
    """
    x, y = box.lo[0], box.hi[0]
    log_n = N.bit_length() - 1
    for c in range(1, log_n + 1):
        step = N / 2 ** c
        m = max(1, -(-x // step))
        if m * step < y:
            return ClassGroupKey(c, int(m))
    return ClassGroupKey(log_n, 1)


def classify_scan(box: Box, N: int) -> ClassGroupKey:
    """Reference classification by listing every multiple at every level."""
    x, y = box.lo[0], box.hi[0]
    log_n = N.bit_length() - 1
    for c in range(1, log_n + 1):
        step = N // 2 ** c
        hits = [m for m in range(1, 2 ** c + 1) if x <= m * step < y]
        if hits:
            return ClassGroupKey(c, hits[0])
    return ClassGroupKey(log_n, 1)


def project(box: Box) -> Box:
    return Box(box.id, box.lo[1:], box.hi[1:], box.weight)


@dataclass
class GroupInstance:
    key: ClassGroupKey
    inner: object
    members: dict = field(default_factory=dict)


class _IntervalGroup:
    """Offset ensemble of weighted-interval engines, the d=1 base case."""

    def __init__(self, cfg: GridConfig, offsets):
        self.ens = Ensemble(WeightedIntervalEngine, cfg, offsets)

    def insert(self, box: Box) -> None:
        self.ens.insert(box)

    def delete(self, box: Box) -> None:
        self.ens.delete(box)

    def _best(self):
        return max(self.ens.engines, key=lambda e: e.value())

    def value(self) -> float:
        return self._best().value()

    def solution(self) -> list:
        return self._best().solution()


class HyperrectangleEngine:
    """(1+eps) log^(d-1) N approximation for weighted boxes with d <= 3."""

    def __init__(self, cfg: GridConfig, offsets=None, seed: int = 0):
        if cfg.d > 3:
            raise ContractError("hyperrectangles support d <= 3")
        self.cfg = cfg
        self.seed = seed
        self.offsets = list(offsets) if offsets is not None else [0.0]
        self.objects: dict = {}
        self.keys: dict = {}
        self.groups: dict = {}
        self.class_weight: dict = {}
        self.best_class = None
        self._base = None
        if cfg.d == 1:
            self._base = _IntervalGroup(cfg, self.offsets)

    def _new_inner(self):
        inner_cfg = GridConfig(self.cfg.N, self.cfg.d - 1, self.cfg.eps, 0.0, self.cfg.mode)
        if inner_cfg.d == 1:
            return _IntervalGroup(inner_cfg, self.offsets)
        return HyperrectangleEngine(inner_cfg, self.offsets, self.seed)

    def insert(self, box: Box) -> None:
        self.update_rect("insert", box)

    def delete(self, box) -> None:
        ident = box.id if isinstance(box, Box) else box
        if ident not in self.objects:
            raise ContractError(f"delete of unknown id {ident}")
        self.update_rect("delete", self.objects[ident])

    def update_rect(self, action: str, box: Box) -> None:
        if action == "insert":
            validate_box(box, self.cfg.N)
            if box.dim != self.cfg.d:
                raise ContractError("box dimension does not match the engine")
            if box.id in self.objects:
                raise ContractError(f"duplicate id {box.id}")
            self.objects[box.id] = box
        elif action == "delete":
            if box.id not in self.objects:
                raise ContractError(f"delete of unknown id {box.id}")
            box = self.objects.pop(box.id)
        else:
            raise ContractError(f"unknown action {action!r}")
        if self._base is not None:
            getattr(self._base, action)(box)
            return
        if action == "insert":
            key = self.keys[box.id] = classify_rect(box, self.cfg.N)
            group = self.groups.get(key)
            if group is None:
                group = self.groups[key] = GroupInstance(key, self._new_inner())
            group.members[box.id] = box
            group.inner.insert(project(box))
        else:
            key = self.keys.pop(box.id)
            group = self.groups[key]
            del group.members[box.id]
            group.inner.delete(project(box))
            if not group.members:
                del self.groups[key]
        self._refresh_class(key.c)

    def _refresh_class(self, c: int) -> None:
        total = sum(g.inner.value() for key, g in self.groups.items() if key.c == c)
        if total > 0:
            self.class_weight[c] = total
        else:
            self.class_weight.pop(c, None)
        self.best_class = max(sorted(self.class_weight), key=lambda k: self.class_weight[k], default=None)

    def value(self) -> float:
        if self._base is not None:
            return self._base.value()
        return 0.0 if self.best_class is None else self.class_weight[self.best_class]

    def solution(self) -> list:
        if self._base is not None:
            return self._base.solution()
        if self.best_class is None:
            return []
        out = []
        for key, g in sorted(self.groups.items()):
            if key.c == self.best_class:
                out.extend(self.objects[p.id] for p in g.inner.solution())
        return out

    def query_rect(self) -> tuple:
        sol = self.solution()
        return float(sum(b.weight for b in sol)), sol

    def recomputed_class_weights(self) -> dict:
        out: dict = {}
        for key, g in self.groups.items():
            out[key.c] = out.get(key.c, 0.0) + g.inner.value()
        return {c: w for c, w in out.items() if w > 0}


def rect_engine(cfg: GridConfig, policy: str = "random:1", seed: int = 0) -> HyperrectangleEngine:
    if policy == "ensemble":
        offsets = build_offsets(GridConfig(cfg.N, 1, cfg.eps))
    else:
        offsets = sample_offsets(GridConfig(cfg.N, 1, cfg.eps), int(policy.split(":", 1)[1]), seed)
    return HyperrectangleEngine(cfg, offsets, seed)
