"""Dynamic (1+eps)-approximate maximum-weight independent set of intervals.

Each cell runs the one-dimensional weighted-cube machinery to keep its point set
P(Q).  It then builds a coordinate list Z(Q) and keeps a solution for every
segment between two coordinates of Z(Q).  A segment's solution splits it at
coordinates of the children's lists.  Each piece is either taken over from a
child (dense) or filled by a short chain of at most 1/eps intervals (sparse).
An exact interval DP then picks the best split.

Sparse values for all pieces at once come from a max-plus DP over chain length
that uses per-class successor tables.  This is the same maximum as trying every
class sequence, computed in bulk.  Chains are rebuilt on demand only for the
pieces that end up in the reported solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .geometry import Box, ContractError
from .grid import CellState, Ensemble, GridConfig, class_floor, weight_class
from .weighted_hypercubes import WeightedHypercubeEngine, grid_lines

KAPPA = 4.0
_NEG = -np.inf


@dataclass
class SegmentTable:
    z: np.ndarray        # Z(Q)
    zall: np.ndarray     # Z(Q) with the children's coordinates
    rows: np.ndarray     # position of each Z(Q) coordinate inside zall
    value: np.ndarray    # value[a, b]: best weight of segment (z[a], z[b])
    back: np.ndarray     # back[a, j]: previous split point on the best path to zall[j]
    dense: np.ndarray    # dense[k, j]: piece (zall[k], zall[j]) is taken from a child


def segment_spacing(cfg: GridConfig, level: int) -> float:
    return cfg.eps * cfg.side(level)


def segment_cap(cfg: GridConfig, p_weight: float) -> float:
    return cfg.eps ** (3 + 1 / cfg.eps) * p_weight / cfg.log_n


def build_segment_grid(state: CellState, cfg: GridConfig) -> np.ndarray:
    """Z(Q): cell bounds, the shifted multiples of eps*side, and slice cuts of P(Q)."""
    lo, hi = state.lo[0], state.hi[0]
    step = segment_spacing(cfg, state.cell.level)
    first = math.ceil((lo - cfg.offset) / step)
    last = math.floor((hi - cfg.offset) / step)
    coords = {lo, hi}
    coords.update(cfg.offset + m * step for m in range(first, last + 1))
    cap = segment_cap(cfg, state.points.total_weight)
    coords.update(grid_lines(state.points, 0, lo, hi, cap))
    return np.array(sorted(c for c in coords if lo <= c <= hi))


def class_window(p_weight: float, eps: float, kappa: float = KAPPA) -> tuple:
    """(k_l, k_u): classes between eps^2 * w and kappa * w."""
    if p_weight <= 0:
        return 0, 0
    k_u = math.ceil(math.log(kappa * p_weight) / math.log1p(eps))
    while k_u > 0 and class_floor(k_u - 1, eps) >= kappa * p_weight:
        k_u -= 1
    low = eps ** 2 * p_weight
    k_l = math.floor(math.log(low) / math.log1p(eps)) if low > 0 else 0
    while class_floor(k_l + 1, eps) <= low:
        k_l += 1
    return k_l, k_u


def sparse_candidate(class_indexes: dict, t1: float, t2: float, steps: int,
                     window: Optional[tuple] = None) -> tuple:
    """Best chain of at most `steps` successor picks inside [t1, t2].

    Each pick takes the successor interval of one weight class after the current
    end.  Returns (weight, intervals).
    """
    classes = sorted(k for k in class_indexes if window is None or window[0] <= k <= window[1])

    @lru_cache(maxsize=None)
    def best(t, left):
        top = (0.0, ())
        if left == 0:
            return top
        for k in classes:
            nxt = class_indexes[k].successor_interval(t)
            if nxt is None or nxt.hi[0] > t2:
                continue
            w, chain = best(nxt.hi[0], left - 1)
            if w + nxt.weight > top[0]:
                top = (w + nxt.weight, (nxt,) + chain)
        return top

    w, chain = best(float(t1), steps)
    return w, list(chain)


def _successor_tables(groups: list, pos: np.ndarray) -> tuple:
    """Successor transitions of every class from every position in `pos`.

    Returns (src, w, tgt): from pos[src] the class successor ends at pos[tgt]
    with weight w.  All classes are handled in one vectorized pass.
    """
    ivs = [b for g in groups for b in g]
    n, G, P = len(ivs), len(groups), len(pos)
    if not n:
        empty = np.array([], dtype=np.int64)
        return empty, np.array([]), empty
    cls = np.repeat(np.arange(G), [len(g) for g in groups])
    lo = np.array([b.lo[0] for b in ivs])
    hi = np.array([b.hi[0] for b in ivs])
    w = np.array([b.weight for b in ivs])
    ids = np.array([b.id for b in ivs])
    by_hi = np.lexsort((ids, hi))
    rank = np.empty(n, dtype=np.int64)
    rank[by_hi] = np.arange(n)
    order = np.lexsort((lo, cls))
    # suffix minimum of (hi, id) rank per class; the class offset stops leaks
    key = (cls * n + rank)[order]
    suffix = np.minimum.accumulate(key[::-1])[::-1] - cls[order] * n
    span = float(max(pos[-1], lo.max())) + 1.0
    skey = cls[order] * span + lo[order]
    qcls = np.repeat(np.arange(G), P)
    qpos = np.tile(pos, G)
    first = np.searchsorted(skey, qcls * span + qpos, "left")
    ends = np.cumsum([len(g) for g in groups])
    has = first < ends[qcls]
    src = np.nonzero(has)[0]
    chosen = by_hi[suffix[first[src]]]
    return src % P, w[chosen], np.searchsorted(pos, hi[chosen])


def sparse_matrix(zall: np.ndarray, groups: list, steps: int) -> np.ndarray:
    """W[k, j]: best chain of at most `steps` picks inside [zall[k], zall[j]]."""
    his = [b.hi[0] for g in groups for b in g]
    pos = np.unique(np.concatenate([zall, np.array(his, dtype=float)]))
    R, P = len(zall), len(pos)
    start = np.searchsorted(pos, zall)
    cur = np.full((R, P), _NEG)
    cur[np.arange(R), start] = 0.0
    best = cur.copy()
    src, w, tgt = _successor_tables(groups, pos)
    if len(src):
        # all classes in one transition, grouped by target for a single reduceat
        order = np.argsort(tgt, kind="stable")
        src, w, tgt = src[order], w[order], tgt[order]
        cuts = np.concatenate(([0], np.nonzero(np.diff(tgt))[0] + 1))
        utgt = tgt[cuts]
        for _ in range(steps):
            nxt = np.full((R, P), _NEG)
            nxt[:, utgt] = np.maximum.reduceat(cur[:, src] + w[None, :], cuts, axis=1)
            if not np.isfinite(nxt).any():
                break
            np.maximum(best, nxt, out=best)
            cur = nxt
    reach = np.maximum.accumulate(best, axis=1)
    W = reach[:, start]
    W[np.tril_indices(R)] = _NEG
    return W


class WeightedIntervalEngine(WeightedHypercubeEngine):
    """Weighted intervals on top of the one-dimensional weighted-cube engine."""

    def __init__(self, cfg: GridConfig, strategy: str = "sweep"):
        if cfg.d != 1:
            raise ContractError("weighted intervals are one-dimensional")
        if cfg.eps < 1 / 8:
            raise ContractError("weighted intervals need eps >= 1/8")
        super().__init__(cfg, strategy)
        self.needs = self.needs | {"class_all"}
        self.steps = int(round(1 / cfg.eps))

    def rebuild_cell(self, state: CellState, kids: list) -> None:
        super().rebuild_cell(state, kids)
        state.payload = self.rebuild_segments(state, kids)

    def rebuild_segments(self, state: CellState, kids: list) -> SegmentTable:
        z = build_segment_grid(state, self.cfg)
        child_z = np.concatenate([k.payload.z for k in kids]) if kids else np.array([])
        zall = np.unique(np.concatenate([z, child_z]))
        R = len(zall)
        rows = np.searchsorted(zall, z)
        in_child = np.isin(zall, child_z)

        groups = [list(idx) for _, idx in sorted(state.class_all.items())]
        sparse = sparse_matrix(zall, groups, self.steps)
        dense_val = np.full((R, R), _NEG)
        for kid in kids:
            kz = kid.payload.z
            at = np.searchsorted(kz, zall)
            at_c = np.minimum(at, len(kz) - 1)
            hit = np.nonzero(kz[at_c] == zall)[0]
            dense_val[np.ix_(hit, hit)] = kid.payload.value[np.ix_(at_c[hit], at_c[hit])]
        dense = dense_val > sparse
        piece = np.where(dense, dense_val, sparse)

        G = np.full((len(z), R), _NEG)
        H = np.full((len(z), R), _NEG)
        back = np.full((len(z), R), -1, dtype=np.int32)
        row_at = {int(j): a for a, j in enumerate(rows)}
        for j in range(R):
            if j:
                cand = G[:, :j] + piece[:j, j][None, :]
                arg = np.argmax(cand, axis=1)
                H[:, j] = cand[np.arange(len(z)), arg]
                back[:, j] = arg
            if in_child[j]:
                G[:, j] = H[:, j]
            else:
                G[:, j] = _NEG
            if j in row_at:
                G[row_at[j], j] = 0.0
        value = H[:, rows]
        value[np.tril_indices(len(z))] = _NEG
        return SegmentTable(z, zall, rows, value, back, dense)

    def on_remove(self, state: CellState) -> None:
        state.payload = None

    # -- queries -------------------------------------------------------------------

    def value(self) -> float:
        root = self.root
        if root is None:
            return 0.0
        t = root.payload
        return float(max(t.value[0, len(t.z) - 1], 0.0))

    def segment_value(self, cell, s1: float, s2: float) -> float:
        t = self.registry[cell].payload
        a = int(np.searchsorted(t.z, s1))
        b = int(np.searchsorted(t.z, s2))
        return float(t.value[a, b])

    def pieces(self, cell, s1: float, s2: float) -> list:
        """The split of segment (s1, s2) of a cell: list of (t1, t2, dense)."""
        t = self.registry[cell].payload
        a = int(np.searchsorted(t.z, s1))
        start = int(t.rows[a])
        j = int(np.searchsorted(t.zall, s2))
        out = []
        while j != start:
            k = int(t.back[a, j])
            out.append((float(t.zall[k]), float(t.zall[j]), bool(t.dense[k, j])))
            j = k
        return out[::-1]

    def expand_segment(self, cell, s1: float, s2: float) -> list:
        out = []
        stack = [(cell, s1, s2)]
        while stack:
            c, a, b = stack.pop()
            state = self.registry[c]
            kids = self.child_states(state)
            for t1, t2, is_dense in self.pieces(c, a, b):
                if is_dense:
                    owner = next(k for k in kids if k.lo[0] <= t1 and t2 <= k.hi[0]
                                 and np.isin([t1, t2], k.payload.z).all())
                    stack.append((owner.cell, t1, t2))
                else:
                    _, chain = sparse_candidate(state.class_all, t1, t2, self.steps)
                    out.extend(chain)
        return out

    def solution(self) -> list:
        root = self.root
        if root is None:
            return []
        return self.expand_segment(root.cell, 0.0, float(self.cfg.N))


def wi_ensemble(cfg: GridConfig, offsets) -> Ensemble:
    return Ensemble(WeightedIntervalEngine, cfg, offsets)
