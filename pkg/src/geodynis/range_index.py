"""Dynamic indexes: weighted points with range sums, and a hypercube store.

WeightedPointIndex keeps edits in a logarithmic family of static sorted blocks
(binary-counter merging).  Blocks store signed weight deltas, so a delete is
just a negative delta and queries add up block answers.  Edits collect in a
buffer that is merged into the blocks at the next query once it is large, so
an index that is only edited never pays for merging.  The net weight of every
coordinate also lives in a dict, which gives O(1) lookups and lets reporting
skip cancelled points.

BoxIndex maps each box to the point (lo_1, hi_1, ..., lo_d, hi_d, size, id), so
"contained in a closed box B" becomes an orthogonal range count.  For intervals
an augmented treap answers successor queries.
"""

from __future__ import annotations

import random
from typing import Iterable, Optional, Sequence

import numpy as np
from sortedcontainers import SortedList

from .geometry import Box, ContractError, contained_in

_BUFFER = 32
_INF = float("inf")


class _Block:
    __slots__ = ("pts", "w", "prefix", "first")

    def __init__(self, pts: np.ndarray, w: np.ndarray):
        order = np.lexsort(pts.T[::-1])
        self.pts = pts[order]
        self.w = w[order]
        self.first = np.ascontiguousarray(self.pts[:, 0])
        self.prefix = np.concatenate(([0.0], np.cumsum(self.w)))

    def __len__(self):
        return len(self.w)

    def _slab(self, lo, hi, closed):
        side_lo = "left" if closed else "right"
        side_hi = "right" if closed else "left"
        i = int(np.searchsorted(self.first, lo, side_lo))
        j = int(np.searchsorted(self.first, hi, side_hi))
        return i, j

    def weight(self, lo, hi, closed) -> float:
        i, j = self._slab(lo[0], hi[0], closed[0])
        if j <= i:
            return 0.0
        if len(lo) == 1:
            return float(self.prefix[j] - self.prefix[i])
        mask = _inside(self.pts[i:j, 1:], lo[1:], hi[1:], closed[1:])
        return float(self.w[i:j][mask].sum())

    def candidates(self, lo, hi, closed) -> np.ndarray:
        i, j = self._slab(lo[0], hi[0], closed[0])
        if j <= i:
            return self.pts[:0]
        pts = self.pts[i:j]
        if len(lo) > 1:
            pts = pts[_inside(pts[:, 1:], lo[1:], hi[1:], closed[1:])]
        return pts


def _inside(pts, lo, hi, closed) -> np.ndarray:
    mask = np.ones(len(pts), dtype=bool)
    for j in range(pts.shape[1]):
        col = pts[:, j]
        if closed[j]:
            mask &= (col >= lo[j]) & (col <= hi[j])
        else:
            mask &= (col > lo[j]) & (col < hi[j])
    return mask


def _closed_flags(openness, d) -> tuple:
    """Accept 'closed'/'open', a bool, or one such value per dimension."""
    if isinstance(openness, (str, bool)):
        openness = [openness] * d
    flags = []
    for o in openness:
        if isinstance(o, str):
            if o not in ("open", "closed"):
                raise ContractError(f"openness must be open or closed, got {o!r}")
            flags.append(o == "closed")
        else:
            flags.append(bool(o))
    if len(flags) != d:
        raise ContractError("openness length must equal the dimension")
    return tuple(flags)


class WeightedPointIndex:
    """Dynamic weighted point multiset with orthogonal range sums."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ContractError("dimension must be positive")
        self.dim = dim
        self._net: dict = {}
        self._blocks: list = []
        self._buffer: dict = {}
        self._axes = None
        self.total_weight = 0.0

    def __len__(self):
        return len(self._net)

    def weight_of(self, p) -> float:
        return self._net.get(tuple(map(float, p)), 0.0)

    def items(self):
        return list(self._net.items())

    # edits -----------------------------------------------------------------

    def point_edit(self, action: str, p, w: float = 0.0) -> None:
        p = tuple(map(float, p))
        if len(p) != self.dim:
            raise ContractError("point dimension mismatch")
        if action == "insert" or action == "add_weight":
            delta = float(w)
        elif action == "delete":
            if p not in self._net:
                raise ContractError(f"delete of absent point {p}")
            delta = -self._net[p] if w == 0.0 else -float(w)
        else:
            raise ContractError(f"unknown action {action!r}")
        self.add_weight(p, delta)

    def insert(self, p, w: float) -> None:
        self.point_edit("insert", p, w)

    def delete(self, p, w: float = 0.0) -> None:
        self.point_edit("delete", p, w)

    def add_weight(self, p, delta: float) -> None:
        if delta == 0.0:
            return
        p = tuple(map(float, p))
        old = self._net.get(p)
        new = (old or 0.0) + delta
        if new <= 1e-12 * max(1.0, abs(delta)):
            if new < -1e-9 * max(1.0, abs(delta)):
                raise ContractError(f"weight underflow at {p}")
            # snap float residue to an exact zero so the entry disappears
            delta, new = -(old or 0.0), 0.0
        if new == 0.0:
            if old is None:
                return
            del self._net[p]
            if self._axes is not None:
                for j, v in enumerate(p):
                    self._axes[j].remove(v)
        else:
            if old is None and self._axes is not None:
                for j, v in enumerate(p):
                    self._axes[j].add(v)
            self._net[p] = new
        self.total_weight += delta
        self._bump(p, delta)

    def _bump(self, p, delta: float) -> None:
        # drop cancelled buffer entries so an edit-only index stays small
        left = self._buffer.get(p, 0.0) + delta
        if left == 0.0:
            self._buffer.pop(p, None)
        else:
            self._buffer[p] = left

    def add_weights(self, points: Sequence[tuple], delta: float) -> None:
        """add_weight(p, delta) for each p; points must already be float tuples."""
        net = self._net
        for p in points:
            old = net.get(p, 0.0)
            if self._axes is not None or old + delta <= 1e-12 * max(1.0, abs(delta)):
                self.add_weight(p, delta)
                continue
            net[p] = old + delta
            self.total_weight += delta
            self._bump(p, delta)

    def _flush(self, force: bool = True) -> None:
        if not self._buffer or (not force and len(self._buffer) < _BUFFER):
            return
        keys = [k for k, v in self._buffer.items() if v != 0.0]
        vals = [self._buffer[k] for k in keys]
        self._buffer = {}
        if not keys:
            return
        block = _Block(np.array(keys, dtype=float).reshape(-1, self.dim), np.array(vals))
        while self._blocks and len(self._blocks[-1]) <= 2 * len(block):
            block = self._merge(self._blocks.pop(), block)
        if len(block):
            self._blocks.append(block)

    def _merge(self, a: _Block, b: _Block) -> _Block:
        pts = np.concatenate([a.pts, b.pts])
        w = np.concatenate([a.w, b.w])
        order = np.lexsort(pts.T[::-1])
        pts, w = pts[order], w[order]
        new_group = np.ones(len(pts), dtype=bool)
        new_group[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        starts = np.flatnonzero(new_group)
        sums = np.add.reduceat(w, starts)
        keep = sums != 0.0
        return _Block(pts[starts][keep], sums[keep])

    # queries ---------------------------------------------------------------

    def range_weight(self, lo, hi, openness="closed") -> float:
        """Total weight of points in the box [lo, hi] with the given openness."""
        lo = tuple(map(float, lo))
        hi = tuple(map(float, hi))
        closed = _closed_flags(openness, self.dim)
        self._flush(force=False)
        total = 0.0
        for block in self._blocks:
            total += block.weight(lo, hi, closed)
        for p, v in self._buffer.items():
            if _point_in(p, lo, hi, closed):
                total += v
        return total

    def range_weight_many(self, los: np.ndarray, his: np.ndarray, openness="closed") -> np.ndarray:
        """range_weight for many closed or open boxes at once."""
        los = np.asarray(los, dtype=float).reshape(-1, self.dim)
        his = np.asarray(his, dtype=float).reshape(-1, self.dim)
        closed = _closed_flags(openness, self.dim)
        out = np.zeros(len(los))
        if not len(los):
            return out
        self._flush(force=False)
        blocks = list(self._blocks)
        if self._buffer:
            blocks.append(_Block(np.array(list(self._buffer), dtype=float).reshape(-1, self.dim),
                                 np.array(list(self._buffer.values()))))
        for block in blocks:
            if self.dim == 1:
                f = block.first
                if closed[0]:
                    i = np.searchsorted(f, los[:, 0], "left")
                    j = np.searchsorted(f, his[:, 0], "right")
                else:
                    i = np.searchsorted(f, los[:, 0], "right")
                    j = np.searchsorted(f, his[:, 0], "left")
                out += np.where(j > i, block.prefix[np.maximum(j, i)] - block.prefix[i], 0.0)
                continue
            for start in range(0, len(los), 256):
                ql, qh = los[start:start + 256], his[start:start + 256]
                pts = block.pts
                mask = np.ones((len(ql), len(pts)), dtype=bool)
                for j in range(self.dim):
                    col = pts[:, j][None, :]
                    if closed[j]:
                        mask &= (col >= ql[:, j:j + 1]) & (col <= qh[:, j:j + 1])
                    else:
                        mask &= (col > ql[:, j:j + 1]) & (col < qh[:, j:j + 1])
                out[start:start + 256] += mask @ block.w
        return out

    def report(self, lo, hi, openness="closed", limit: Optional[int] = None) -> list:
        """Live points inside the box, optionally stopping after `limit` hits."""
        lo = tuple(map(float, lo))
        hi = tuple(map(float, hi))
        closed = _closed_flags(openness, self.dim)
        self._flush(force=False)
        found = []
        seen = set()
        sources = [map(tuple, b.candidates(lo, hi, closed).tolist()) for b in self._blocks]
        sources.append(p for p in self._buffer if _point_in(p, lo, hi, closed))
        for src in sources:
            for p in src:
                if p in seen or self._net.get(p, 0.0) <= 0.0:
                    continue
                seen.add(p)
                found.append(p)
                if limit is not None and len(found) >= limit:
                    return found
        return found

    def median_split(self, dim: int, x: float, z: float) -> float:
        """A y in [x, z] leaving at most half the slab's points strictly on each side.

        `dim` counts from 1.  An empty slab returns x.
        """
        if not 1 <= dim <= self.dim:
            raise ContractError("median_split dimension out of range")
        axis = self._axis(dim)
        i = axis.bisect_left(x)
        j = axis.bisect_right(z)
        m = j - i
        if m <= 0:
            return float(x)
        return float(axis[i + (m - 1) // 2])

    def _axis(self, dim: int) -> SortedList:
        # per-axis sorted coordinates, built on the first median query
        if self._axes is None:
            self._axes = [SortedList(p[j] for p in self._net) for j in range(self.dim)]
        return self._axes[dim - 1]

    def slab_count(self, dim: int, x: float, z: float) -> int:
        axis = self._axis(dim)
        return axis.bisect_right(z) - axis.bisect_left(x)


def _point_in(p, lo, hi, closed) -> bool:
    for v, l, h, c in zip(p, lo, hi, closed):
        if c:
            if v < l or v > h:
                return False
        elif v <= l or v >= h:
            return False
    return True


# -------------------------------------------------------------------------
# interval successor treap


class _Node:
    __slots__ = ("key", "val", "prio", "left", "right", "agg")

    def __init__(self, key, val, prio):
        self.key = key
        self.val = val
        self.prio = prio
        self.left = None
        self.right = None
        self.agg = val


def _pull(n: _Node) -> None:
    a = n.val
    if n.left is not None and n.left.agg < a:
        a = n.left.agg
    if n.right is not None and n.right.agg < a:
        a = n.right.agg
    n.agg = a


def _split(n, key):
    """Split into (keys < key, keys >= key)."""
    if n is None:
        return None, None
    if n.key < key:
        l, r = _split(n.right, key)
        n.right = l
        _pull(n)
        return n, r
    l, r = _split(n.left, key)
    n.left = r
    _pull(n)
    return l, n


def _join(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a.prio > b.prio:
        a.right = _join(a.right, b)
        _pull(a)
        return a
    b.left = _join(a, b.left)
    _pull(b)
    return b


class _SuccessorTreap:
    """Intervals keyed by (lo, id); each subtree caches its minimum (hi, id)."""

    def __init__(self, seed: int = 0x5EED):
        self.root = None
        self._rng = random.Random(seed)

    def insert(self, lo, hi, ident):
        node = _Node((lo, ident), (hi, ident), self._rng.random())
        left, right = _split(self.root, node.key)
        self.root = _join(_join(left, node), right)

    def delete(self, lo, ident):
        left, right = _split(self.root, (lo, ident))
        _, right = _split(right, (lo, ident + 0.5))
        self.root = _join(left, right)

    def successor(self, t):
        """Minimum (hi, id) over entries with lo >= t."""
        best = None
        n = self.root
        while n is not None:
            if n.key[0] >= t:
                cand = n.val
                if n.right is not None and n.right.agg < cand:
                    cand = n.right.agg
                if best is None or cand < best:
                    best = cand
                n = n.left
            else:
                n = n.right
        return best


# -------------------------------------------------------------------------


class BoxIndex:
    """Dynamic store of boxes keyed by id with containment and successor queries."""

    def __init__(self, dim: int):
        self.dim = dim
        self._entries: dict = {}
        self._by_size = SortedList()
        self._points: Optional[WeightedPointIndex] = None
        self._owner: dict = {}
        self._succ = _SuccessorTreap() if dim == 1 else None

    def __len__(self):
        return len(self._entries)

    def __contains__(self, ident):
        return ident in self._entries

    def __iter__(self):
        return iter(self._entries.values())

    @property
    def is_empty(self) -> bool:
        return not self._entries

    def get(self, ident) -> Optional[Box]:
        return self._entries.get(ident)

    def in_size_order(self) -> list:
        return [self._entries[i] for _, i in self._by_size]

    def _key_point(self, c: Box) -> tuple:
        coords = []
        for l, h in zip(c.lo, c.hi):
            coords += [l, h]
        return tuple(coords) + (c.size, float(c.id))

    def _ensure_points(self) -> WeightedPointIndex:
        if self._points is None:
            self._points = WeightedPointIndex(2 * self.dim + 2)
            for c in self._entries.values():
                self._points.add_weight(self._key_point(c), 1.0)
        return self._points

    def box_edit(self, action: str, c: Box) -> None:
        if c.dim != self.dim:
            raise ContractError("box dimension mismatch")
        if action == "insert":
            if c.id in self._entries:
                raise ContractError(f"duplicate insert of id {c.id}")
            self._entries[c.id] = c
            self._by_size.add((c.size, c.id))
            if self._points is not None:
                self._points.add_weight(self._key_point(c), 1.0)
            if self._succ is not None:
                self._succ.insert(c.lo[0], c.hi[0], c.id)
        elif action == "delete":
            stored = self._entries.pop(c.id, None)
            if stored is None:
                raise ContractError(f"delete of missing id {c.id}")
            self._by_size.remove((stored.size, stored.id))
            if self._points is not None:
                self._points.add_weight(self._key_point(stored), -1.0)
            if self._succ is not None:
                self._succ.delete(stored.lo[0], stored.id)
        else:
            raise ContractError(f"unknown action {action!r}")

    def insert(self, c: Box) -> None:
        self.box_edit("insert", c)

    def delete(self, c) -> None:
        if not isinstance(c, Box):
            c = self._entries.get(c) or Box(int(c), (0.0,) * self.dim, (1.0,) * self.dim)
        self.box_edit("delete", c)

    def _region(self, lo, hi, size_hi=_INF, id_hi=_INF, size_lo=-_INF):
        qlo, qhi = [], []
        for l, h in zip(lo, hi):
            qlo += [l, l]
            qhi += [h, h]
        return tuple(qlo) + (size_lo, -_INF), tuple(qhi) + (size_hi, id_hi)

    def count_contained(self, lo, hi) -> int:
        pts = self._ensure_points()
        a, b = self._region(lo, hi)
        return int(round(pts.range_weight(a, b)))

    def smallest_contained(self, lo, hi) -> Optional[Box]:
        """Minimum (size, id) entry lying inside the closed box [lo, hi]."""
        if not self._entries:
            return None
        pts = self._ensure_points()
        if self.count_contained(lo, hi) == 0:
            return None

        def hit_upto(rank):
            s, ident = self._by_size[rank]
            below = np.nextafter(s, -_INF)
            a, b = self._region(lo, hi, size_hi=below)
            if pts.range_weight(a, b) > 0.5:
                return True
            a, b = self._region(lo, hi, size_lo=s, size_hi=s, id_hi=float(ident))
            return pts.range_weight(a, b) > 0.5

        left, right = 0, len(self._by_size) - 1
        while left < right:
            mid = (left + right) // 2
            if hit_upto(mid):
                right = mid
            else:
                left = mid + 1
        return self._entries[self._by_size[left][1]]

    def any_contained(self, lo, hi) -> Optional[Box]:
        """Some entry inside [lo, hi]; cheaper than the smallest one."""
        if not self._entries:
            return None
        pts = self._ensure_points()
        a, b = self._region(lo, hi)
        hit = pts.report(a, b, limit=1)
        if not hit:
            return None
        return self._entries[int(hit[0][-1])]

    def successor_interval(self, t: float) -> Optional[Box]:
        """Interval with the smallest right end among those starting at or after t."""
        if self._succ is None:
            raise ContractError("successor_interval needs a one-dimensional index")
        best = self._succ.successor(t)
        return None if best is None else self._entries[best[1]]


def naive_smallest_contained(boxes: Iterable[Box], lo, hi) -> Optional[Box]:
    inside = [c for c in boxes if contained_in(c, (lo, hi))]
    return min(inside, key=lambda c: (c.size, c.id), default=None)


def naive_successor(boxes: Iterable[Box], t: float) -> Optional[Box]:
    after = [c for c in boxes if c.lo[0] >= t]
    return min(after, key=lambda c: (c.hi[0], c.id), default=None)


def naive_range_weight(points: dict, lo, hi, openness="closed") -> float:
    closed = _closed_flags(openness, len(lo))
    return float(sum(w for p, w in points.items() if _point_in(p, lo, hi, closed)))
