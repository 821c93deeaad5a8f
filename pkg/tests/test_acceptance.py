"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they happen;
they are also repeated in the terminal summary.  `python tests/test_acceptance.py`
runs the same checks without pytest.
"""

from __future__ import annotations

import random
import statistics
import time
from itertools import combinations

import pytest

from geodynis.bench import MatrixConfig, matrix_run, update_latency
from geodynis.geometry import intersects_open, is_independent, make_box
from geodynis.grid import GridConfig, sample_offsets, weight_class
from geodynis.hyperrectangles import rect_engine
from geodynis.oracle import enumerate_is, exact_box_weight, exact_interval_weight
from geodynis.range_index import (BoxIndex, WeightedPointIndex, naive_range_weight,
                                  naive_smallest_contained, naive_successor)
from geodynis.unweighted_hypercubes import UnweightedHypercubeEngine
from geodynis.unweighted_intervals import UnweightedIntervalEngine
from geodynis.weighted_hypercubes import WeightedHypercubeEngine
from geodynis.weighted_intervals import WeightedIntervalEngine, sparse_candidate

from conftest import random_cubes

RESULTS: list = []
_MATRIX: dict = {}


def record(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    return passed


def best_of(engines, weight) -> float:
    return max(weight(e) for e in engines)


# -- 1 and 6: the validity sweep ----------------------------------------------------


def validity_matrix() -> dict:
    if not _MATRIX:
        mc = MatrixConfig()
        rows = []
        start = time.perf_counter()
        for algo, d, eps, seed in mc.cells():
            rep = matrix_run(mc, algo, d, eps, seed)
            rows.append((algo, d, eps, seed, rep))
        _MATRIX.update(rows=rows, seconds=time.perf_counter() - start, config=mc)
    return _MATRIX


def criterion_1() -> bool:
    m = validity_matrix()
    rows = m["rows"]
    bad = sum(rep.violations for *_, rep in rows)
    queries = sum(len(rep.queries) for *_, rep in rows)
    events = m["config"].events
    minutes = m["seconds"] / 60
    note = "" if minutes < 10 else " (over the 10 min runtime expectation)"
    return record(1, bad == 0,
                  f"{len(rows)} runs x {events} events, {queries} solution checks, "
                  f"{bad} violations, {minutes:.1f} min{note}")


def criterion_6() -> bool:
    m = validity_matrix()
    whc = [rep for algo, *_, rep in m["rows"] if algo == "whc"]
    audits = sum(rep.audits for rep in whc)
    bad = sum(rep.violations for rep in whc)
    # the ratio instances of criterion 7 are audited after every update as well
    extra_audits, extra_bad = _whc_ratio_runs()[1:]
    return record(6, bad == 0 and extra_bad == 0 and audits > 0,
                  f"w(P(root)) <= 2^(d+1) w(SOL) checked after {audits + extra_audits} updates "
                  f"of {len(whc)} matrix runs and the ratio runs: {bad + extra_bad} violations")


# -- 2: index oracles -----------------------------------------------------------------


def _point_index_ops(rng, dim, ops) -> int:
    idx = WeightedPointIndex(dim)
    shadow: dict = {}
    mismatches = 0
    for _ in range(ops):
        r = rng.random()
        p = tuple(float(rng.randint(0, 30)) for _ in range(dim))
        if r < 0.45:
            w = float(rng.randint(1, 9))
            idx.insert(p, w)
            shadow[p] = shadow.get(p, 0.0) + w
        elif r < 0.6 and shadow:
            q = rng.choice(sorted(shadow))
            idx.delete(q)
            del shadow[q]
        elif r < 0.85:
            a = [rng.randint(0, 30) for _ in range(dim)]
            b = [x + rng.randint(0, 15) for x in a]
            openness = rng.choice(["open", "closed"])
            mismatches += idx.range_weight(a, b, openness) != naive_range_weight(shadow, a, b, openness)
        else:
            axis = rng.randint(1, dim)
            x = rng.randint(0, 30)
            z = x + rng.randint(0, 20)
            coords = sorted(p[axis - 1] for p in shadow if x <= p[axis - 1] <= z)
            want = float(x) if not coords else coords[(len(coords) - 1) // 2]
            y = idx.median_split(axis, x, z)
            below = sum(c < y for c in coords)
            above = sum(c > y for c in coords)
            ok = y == want and below <= len(coords) / 2 and above <= len(coords) / 2
            mismatches += not ok
    mismatches += abs(idx.total_weight - sum(shadow.values())) > 0
    return mismatches


def _box_index_ops(rng, dim, ops) -> int:
    idx = BoxIndex(dim)
    live: dict = {}
    mismatches = 0
    for step in range(ops):
        r = rng.random()
        if r < 0.4 or not live:
            s = rng.randint(1, 6)
            lo = [rng.randint(0, 40) for _ in range(dim)]
            live[step] = make_box(step, lo, [x + s for x in lo])
            idx.insert(live[step])
        elif r < 0.6:
            idx.delete(live.pop(rng.choice(list(live))))
        elif r < 0.85 or dim > 1:
            a = [rng.randint(0, 40) for _ in range(dim)]
            b = [x + rng.randint(0, 20) for x in a]
            mismatches += idx.smallest_contained(a, b) != naive_smallest_contained(live.values(), a, b)
        else:
            t = rng.uniform(0, 46)
            mismatches += idx.successor_interval(t) != naive_successor(live.values(), t)
    return mismatches


def criterion_2() -> bool:
    rng = random.Random(2)
    start = time.perf_counter()
    bad = {
        "points d=1": _point_index_ops(rng, 1, 10_000),
        "points d=2": _point_index_ops(rng, 2, 10_000),
        "boxes d=1": _box_index_ops(rng, 1, 10_000),
        "boxes d=2": _box_index_ops(rng, 2, 10_000),
    }
    secs = time.perf_counter() - start
    total = sum(bad.values())
    return record(2, total == 0 and secs < 60,
                  f"4 index types x 10^4 edits+queries, {total} mismatches, {secs:.1f} s")


# -- 3 and 4: unweighted intervals -------------------------------------------------------


def criterion_3() -> bool:
    rng = random.Random(3)
    cells = []
    while len(cells) < 500:
        cfg = GridConfig(256, 1, rng.choice([0.5, 0.25, 0.125]), offset=float(rng.randint(0, 255)))
        e = UnweightedIntervalEngine(cfg)
        for i in range(rng.randint(20, 200)):
            s = rng.randint(1, 40)
            x = rng.randint(0, 256 - s)
            e.insert(make_box(i, x, x + s))
        cells.extend(st for st in e.registry.values() if st.payload.kind == "explicit")
    sample = rng.sample(cells, 500)
    equal = sum(st.payload.cardinality == exact_interval_weight(list(st.all)) for st in sample)
    return record(3, equal == 500, f"{equal}/500 below-threshold cells equal the exact optimum")


def criterion_4() -> bool:
    rng = random.Random(4)
    eps = 0.125
    cfg = GridConfig(512, 1, eps)
    worst = 0.0
    samples = 25
    for trial in range(samples):
        n = rng.randint(50, 300)
        boxes = []
        for i in range(n):
            s = rng.randint(1, 64)
            x = rng.randint(0, 512 - s)
            boxes.append(make_box(i, x, x + s))
        engines = []
        for a in sample_offsets(cfg, 8, trial) + [0.0]:
            e = UnweightedIntervalEngine(cfg.with_offset(a))
            e.load(boxes)
            assert is_independent(e.solution())
            engines.append(e)
        best = best_of(engines, lambda e: e.value())
        worst = max(worst, exact_interval_weight(boxes) / best)
    bound = 1 + 3 * eps
    return record(4, worst <= bound,
                  f"{samples} samples, n <= 300, worst |OPT|/|SOL| = {worst:.3f} (bound {bound})")


# -- 5: unweighted hypercubes ---------------------------------------------------------------


def criterion_5() -> bool:
    rng = random.Random(5)
    eps = 0.125
    cfg = GridConfig(64, 2, eps)
    worst = 0.0
    sequences = ordered = 0
    samples = 30
    for trial in range(samples):
        boxes = random_cubes(rng, rng.randint(6, 18), 2, 64, (1, 2, 3, 4, 6, 8, 12))
        best = 0
        for a in sample_offsets(cfg, 6, trial) + [0.0]:
            e = UnweightedHypercubeEngine(cfg.with_offset(a))
            for b in boxes:
                e.insert(b)
                for cell in e.rebuilt_last:
                    sizes = e.registry[cell].payload.added_sizes
                    sequences += 1
                    ordered += sizes == sorted(sizes)
            assert is_independent(e.solution())
            best = max(best, e.value())
        worst = max(worst, exact_box_weight(boxes) / best)
    bound = (1 + 5 * eps) * 4
    return record(5, worst <= bound and ordered == sequences,
                  f"{samples} samples, n <= 18, worst ratio {worst:.3f} (bound {bound}); "
                  f"{ordered}/{sequences} rebuild size sequences non-decreasing")


# -- 7: weighted hypercube ratio ----------------------------------------------------------


_WHC: list = []


def _whc_ratio_runs() -> tuple:
    if not _WHC:
        rng = random.Random(7)
        eps = 0.125
        worst = {1: 0.0, 2: 0.0}
        audits = bad = 0
        for d in (1, 2):
            cfg = GridConfig(64, d, eps)
            for trial in range(20):
                boxes = random_cubes(rng, rng.randint(6, 20), d, 64, (1, 2, 3, 4, 6, 8, 12), W=64)
                best = 0.0
                for a in sample_offsets(cfg, 6, trial) + [0.0]:
                    e = WeightedHypercubeEngine(cfg.with_offset(a))
                    for b in boxes:
                        e.insert(b)
                        audits += 1
                        bad += e.point_sol_gap() < -1e-9 * max(1.0, e.weight_estimate())
                    assert is_independent(e.solution())
                    best = max(best, e.emitted_weight())
                worst[d] = max(worst[d], exact_box_weight(boxes) / best)
        _WHC.extend([worst, audits, bad])
    return tuple(_WHC)


def criterion_7() -> bool:
    worst = _whc_ratio_runs()[0]
    eps = 0.125
    ok = all(worst[d] <= (4 + 5 * eps) * 2 ** d for d in (1, 2))
    return record(7, ok, f"20 samples per d, n <= 20, W = 64: worst ratio d=1 {worst[1]:.3f} "
                         f"(bound {(4 + 5 * eps) * 2}), d=2 {worst[2]:.3f} (bound {(4 + 5 * eps) * 4})")


# -- 8: sparse chains ------------------------------------------------------------------------


def criterion_8() -> bool:
    rng = random.Random(8)
    violations = 0
    for trial in range(200):
        eps = (0.5, 0.25, 0.125)[trial % 3]
        steps = int(1 / eps)
        n = rng.randint(1, 12)
        t1 = float(rng.randint(0, 20))
        t2 = t1 + rng.randint(4, 40)
        boxes = []
        for i in range(n):
            s = rng.randint(1, max(1, int(t2 - t1)))
            x = rng.randint(int(t1), int(t2) - s)
            boxes.append(make_box(i, x, x + s, rng.randint(1, 50)))
        idx: dict = {}
        for b in boxes:
            idx.setdefault(weight_class(b.weight, eps), BoxIndex(1)).insert(b)
        w, chain = sparse_candidate(idx, t1, t2, steps)
        best, _ = enumerate_is(boxes, max_size=steps)
        ok = is_independent(chain) and len(chain) <= steps and w >= best / (1 + eps) - 1e-9
        violations += not ok
    return record(8, violations == 0, f"200 subsegments with <= 12 intervals: {violations} violations")


# -- 9: weighted intervals ---------------------------------------------------------------------


def criterion_9() -> bool:
    rng = random.Random(9)
    cfg = GridConfig(256, 1, 0.125)
    ratios = []
    for trial in range(20):
        n = rng.randint(30, 150)
        boxes = []
        for i in range(n):
            s = rng.choice([1, 2, 3, 4, 6, 8, 12, 20, 40])
            x = rng.randint(0, 256 - s)
            boxes.append(make_box(i, x, x + s, rng.randint(1, 64)))
        best = 0.0
        for a in sample_offsets(cfg, 4, trial) + [0.0]:
            e = WeightedIntervalEngine(cfg.with_offset(a))
            e.load(boxes)
            sol = e.solution()
            assert is_independent(sol)
            best = max(best, sum(b.weight for b in sol))
        ratios.append(best / exact_interval_weight(boxes))
    med = statistics.median(ratios)
    return record(9, min(ratios) >= 0.7 and med >= 0.85,
                  f"20 samples, n <= 150: min w(SOL)/w(OPT) {min(ratios):.3f} (>= 0.7), "
                  f"median {med:.3f} (>= 0.85)")


# -- 10: hyperrectangles ----------------------------------------------------------------------


def criterion_10() -> bool:
    rng = random.Random(10)
    eps = 0.125
    cfg = GridConfig(256, 2, eps)
    worst = 0.0
    pairs = crossing = 0
    for trial in range(25):
        boxes = []
        for i in range(rng.randint(4, 16)):
            lo = [rng.randint(0, 230) for _ in range(2)]
            hi = [min(256, x + rng.randint(1, 40)) for x in lo]
            boxes.append(make_box(i, lo, hi, rng.randint(1, 20)))
        e = rect_engine(cfg, "random:2", trial)
        for b in boxes:
            e.insert(b)
        groups = list(e.groups.values())
        for g, h in combinations(groups, 2):
            if g.key.c == h.key.c:
                for a in g.members.values():
                    for b in h.members.values():
                        pairs += 1
                        crossing += intersects_open(a, b)
        w, sol = e.query_rect()
        assert is_independent(sol)
        worst = max(worst, exact_box_weight(boxes) / w)
    bound = (1 + 5 * eps) * cfg.log_n
    return record(10, crossing == 0 and worst <= bound,
                  f"{pairs} cross-group pairs, {crossing} overlapping; "
                  f"worst ratio {worst:.3f} (bound {bound})")


# -- 11: auxiliary grids ------------------------------------------------------------------------


def criterion_11() -> bool:
    rng = random.Random(11)
    grids = failed = 0
    for d in (1, 2):
        for eps in (0.5, 0.25, 0.125):
            e = WeightedHypercubeEngine(GridConfig(64, d, eps))
            e.keep_grids = True
            live = []
            for i in range(150):
                s = rng.choice([1, 2, 3, 4, 6, 8])
                lo = [rng.randint(0, 64 - s) for _ in range(d)]
                live.append(make_box(i, lo, [x + s for x in lo], rng.randint(1, 64)))
                e.insert(live[-1])
                if rng.random() < 0.3:
                    e.delete(live.pop(rng.randrange(len(live))))
                for cell in e.rebuilt_last:
                    if cell in e.grids:
                        grids += 1
                        failed += bool(e.grids.pop(cell)[1])
    return record(11, failed == 0 and grids > 0,
                  f"{grids} grids checked for slice weight, count and bounds: {failed} failed")


# -- 12: scaling -----------------------------------------------------------------------------------


def criterion_12() -> bool:
    small = update_latency(4096, 2000, seed=12)
    large = update_latency(65536, 2000, seed=12)
    ratio = large / small
    return record(12, ratio <= 6, f"mean update {small / 1e3:.0f} us at n=4096, "
                                  f"{large / 1e3:.0f} us at n=65536, ratio {ratio:.2f} (<= 6)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(12)])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
