"""Exact ground truth for small instances.

Nothing here shares code with the engines: the interval optimum is a plain
dynamic program and the box optimum is a branch and bound over the conflict
graph.  Both return the lexicographically smallest optimal id set, so tests
that compare subsets are deterministic.
"""

from __future__ import annotations

import bisect
from itertools import combinations
from typing import Callable, Sequence

from .geometry import Box, ContractError, intersects_open

BOX_LIMIT = 24
_TOL = 1e-9


def _interval_opt(items: Sequence[Box]) -> tuple:
    """Weighted interval scheduling by right endpoint.  Returns (weight, boxes)."""
    if not items:
        return 0.0, []
    order = sorted(items, key=lambda b: (b.hi[0], b.id))
    ends = [b.hi[0] for b in order]
    best = [0.0] * (len(order) + 1)
    take = [False] * (len(order) + 1)
    prev = [0] * (len(order) + 1)
    for i, b in enumerate(order, start=1):
        # intervals j < i compatible with b end at or before its left end
        p = bisect.bisect_right(ends, b.lo[0], 0, i - 1)
        prev[i] = p
        with_b = best[p] + b.weight
        if with_b > best[i - 1]:
            best[i], take[i] = with_b, True
        else:
            best[i] = best[i - 1]
    chosen = []
    i = len(order)
    while i > 0:
        if take[i]:
            chosen.append(order[i - 1])
            i = prev[i]
        else:
            i -= 1
    return best[-1], chosen


def _box_opt(items: Sequence[Box]) -> tuple:
    """Branch and bound on the conflict graph; branches on the max-degree vertex."""
    n = len(items)
    if n == 0:
        return 0.0, []
    adj = [0] * n
    for i, j in combinations(range(n), 2):
        if intersects_open(items[i], items[j]):
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    w = [b.weight for b in items]
    best = [0.0, 0]

    def rest_weight(mask):
        s = 0.0
        while mask:
            low = mask & -mask
            s += w[low.bit_length() - 1]
            mask ^= low
        return s

    def search(cand, acc, chosen):
        if acc + rest_weight(cand) <= best[0]:
            return
        pivot, deg = -1, -1
        m = cand
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            dv = bin(adj[v] & cand).count("1")
            if dv > deg:
                pivot, deg = v, dv
        if deg <= 0:
            total = acc + rest_weight(cand)
            if total > best[0]:
                best[0], best[1] = total, chosen | cand
            return
        bit = 1 << pivot
        search(cand & ~bit & ~adj[pivot], acc + w[pivot], chosen | bit)
        search(cand & ~bit, acc, chosen)

    search((1 << n) - 1, 0.0, 0)
    picked = [items[i] for i in range(n) if best[1] >> i & 1]
    return best[0], picked


def _canonical(items: Sequence[Box], solve: Callable) -> tuple:
    """Lexicographically smallest optimal id set, by deciding ids in ascending order."""
    opt, _ = solve(items)
    tol = _TOL * max(1.0, abs(opt))
    chosen: list = []
    acc = 0.0
    pool = sorted(items, key=lambda b: b.id)
    for pos, b in enumerate(pool):
        if any(intersects_open(b, c) for c in chosen):
            continue
        later = [c for c in pool[pos + 1:] if not intersects_open(b, c)
                 and not any(intersects_open(c, x) for x in chosen)]
        value, _ = solve(later)
        if acc + b.weight + value >= opt - tol:
            chosen.append(b)
            acc += b.weight
    return opt, chosen


def exact_interval_is(items: Sequence[Box]) -> tuple:
    """Maximum-weight set of pairwise disjoint open intervals."""
    for b in items:
        if b.dim != 1:
            raise ContractError("exact_interval_is takes intervals")
    return _canonical(list(items), _interval_opt)


def exact_interval_weight(items: Sequence[Box]) -> float:
    return _interval_opt(list(items))[0]


def exact_box_is(items: Sequence[Box], limit: int = BOX_LIMIT) -> tuple:
    """Maximum-weight independent set of boxes, exact for up to `limit` items."""
    if len(items) > limit:
        raise ContractError(f"exact_box_is refuses {len(items)} > {limit} items")
    return _canonical(list(items), _box_opt)


def exact_box_weight(items: Sequence[Box], limit: int = BOX_LIMIT) -> float:
    if len(items) > limit:
        raise ContractError(f"exact_box_is refuses {len(items)} > {limit} items")
    return _box_opt(list(items))[0]


def enumerate_is(items: Sequence[Box], max_size: int | None = None) -> tuple:
    """Plain subset enumeration; the double check for everything above."""
    items = list(items)
    n = len(items)
    conflict = [[intersects_open(items[i], items[j]) for j in range(n)] for i in range(n)]
    best_w, best_set = 0.0, []
    top = n if max_size is None else min(n, max_size)
    for k in range(1, top + 1):
        for combo in combinations(range(n), k):
            if any(conflict[i][j] for i, j in combinations(combo, 2)):
                continue
            wt = sum(items[i].weight for i in combo)
            if wt > best_w:
                best_w, best_set = wt, [items[i] for i in combo]
    return best_w, best_set
