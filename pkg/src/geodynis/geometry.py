"""Boxes and the predicates every engine is built on.

A box is an open axis-parallel product (lo, hi).  Two boxes conflict only when
their open interiors overlap, so sharing a face is fine.  Containment in a
query box uses closed bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence


class ContractError(ValueError):
    """Raised when a caller breaks an operation's precondition."""


@dataclass(frozen=True)
class Box:
    id: int
    lo: tuple
    hi: tuple
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ContractError(f"box {self.id}: lo/hi dimension mismatch")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def size(self) -> float:
        """Edge length along the first axis (the edge length for cubes)."""
        return self.hi[0] - self.lo[0]

    @property
    def is_cube(self) -> bool:
        s = self.size
        return all(h - l == s for l, h in zip(self.lo, self.hi))

    def edges(self) -> list:
        return [h - l for l, h in zip(self.lo, self.hi)]


@dataclass(frozen=True)
class QueryBox:
    """Closed per-dimension bounds [lo, hi]."""

    lo: tuple
    hi: tuple

    @property
    def dim(self) -> int:
        return len(self.lo)


def make_box(id, lo, hi, weight=1.0) -> Box:
    if isinstance(lo, (int, float)):
        lo, hi = (lo,), (hi,)
    return Box(int(id), tuple(lo), tuple(hi), float(weight))


def validate_box(box: Box, N: float, cube: bool = False) -> Box:
    """Reject boxes that no engine can hold: edges below 1, outside [0,N], bad weights."""
    for l, h in zip(box.lo, box.hi):
        if not (0 <= l < h <= N):
            raise ContractError(f"box {box.id}: coordinates outside [0, {N}]")
        if h - l < 1:
            raise ContractError(f"box {box.id}: edge shorter than 1")
    if not box.weight >= 1:
        raise ContractError(f"box {box.id}: weight must be >= 1")
    if cube and not box.is_cube:
        raise ContractError(f"box {box.id}: not a hypercube")
    return box


def intersects_open(a: Box, b: Box) -> bool:
    if a.dim != b.dim:
        raise ContractError("dimension mismatch")
    for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi):
        if ah <= bl or bh <= al:
            return False
    return True


def intersects_region(box: Box, lo: Sequence[float], hi: Sequence[float]) -> bool:
    """Open overlap between a box and the open interior of [lo, hi]."""
    for bl, bh, l, h in zip(box.lo, box.hi, lo, hi):
        if bh <= l or h <= bl:
            return False
    return True


def contained_in(c: Box, q) -> bool:
    lo, hi = (q.lo, q.hi) if isinstance(q, QueryBox) else q
    return all(ql <= cl and ch <= qh for cl, ch, ql, qh in zip(c.lo, c.hi, lo, hi))


def vertices(c: Box) -> list:
    return [tuple(p) for p in product(*zip(c.lo, c.hi))]


def is_independent(boxes: Iterable[Box]) -> bool:
    return not conflicting_pairs(boxes)


def conflicting_pairs(boxes: Iterable[Box]) -> list:
    """All id pairs that overlap.  Sweeps on the first axis so large sets stay cheap."""
    items = sorted(boxes, key=lambda b: b.lo[0])
    bad = []
    active: list = []
    for b in items:
        active = [a for a in active if a.hi[0] > b.lo[0]]
        for a in active:
            if intersects_open(a, b):
                bad.append((a.id, b.id))
        active.append(b)
    return bad


def total_weight(boxes: Iterable[Box]) -> float:
    return float(sum(b.weight for b in boxes))
