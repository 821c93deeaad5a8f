"""Workload generation and replay with latency and oracle bookkeeping."""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from .geometry import Box, ContractError, conflicting_pairs
from .grid import Ensemble, GridConfig, build_offsets, sample_offsets, snap_eps, snap_space
from .hyperrectangles import HyperrectangleEngine
from .oracle import BOX_LIMIT, exact_box_weight, exact_interval_weight
from .unweighted_hypercubes import UnweightedHypercubeEngine
from .unweighted_intervals import UnweightedIntervalEngine
from .weighted_hypercubes import WeightedHypercubeEngine
from .weighted_intervals import WeightedIntervalEngine

SCHEMA = "geo-dynis/1"
ALGOS = ("uint", "uhc", "whc", "wint", "wrect")
OPS = ("insert", "delete", "query_size", "query_weight", "query_solution")
_FIELDS = {"op", "id", "coords", "weight"}


class UsageError(ContractError):
    """Bad workload, bad flags, or a stream that does not fit the engine."""


@dataclass
class WorkloadSpec:
    n: int = 1000
    d: int = 1
    N: int = 1024
    min_size: float = 1.0
    max_size: Optional[float] = None
    W: float = 1.0
    churn: float = 0.0
    query_every: int = 0
    cubes: bool = True
    integer: bool = True
    max_live: int = 0
    events: int = 0

    def validate(self) -> None:
        max_size = self.max_size if self.max_size is not None else self.N / 8
        if self.n < 0 or self.d < 1 or self.N < 2:
            raise UsageError("n must be >= 0, d >= 1, N >= 2")
        if not 1 <= self.min_size <= max_size <= self.N:
            raise UsageError("need 1 <= min_size <= max_size <= N")
        if self.W < 1 or not 0 <= self.churn < 1 or self.query_every < 0:
            raise UsageError("need W >= 1, churn in [0,1), query_every >= 0")
        if self.max_live < 0 or self.events < 0:
            raise UsageError("max_live and events must be >= 0")


@dataclass
class WorkloadEvent:
    op: str
    id: Optional[int] = None
    coords: Optional[list] = None
    weight: Optional[float] = None

    def to_json(self) -> str:
        rec = {"op": self.op}
        if self.id is not None:
            rec["id"] = self.id
        if self.coords is not None:
            rec["coords"] = self.coords
        if self.weight is not None:
            rec["weight"] = self.weight
        return json.dumps(rec, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "WorkloadEvent":
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad workload line: {exc}") from None
        extra = set(rec) - _FIELDS
        if extra:
            raise UsageError(f"unknown fields {sorted(extra)}")
        if rec.get("op") not in OPS:
            raise UsageError(f"unknown op {rec.get('op')!r}")
        ev = cls(rec["op"], rec.get("id"), rec.get("coords"), rec.get("weight"))
        if ev.op == "insert" and (ev.id is None or not ev.coords):
            raise UsageError("insert needs id and coords")
        if ev.op == "delete" and ev.id is None:
            raise UsageError("delete needs id")
        return ev

    def box(self) -> Box:
        w = 1.0 if self.weight is None else float(self.weight)
        return Box(int(self.id), tuple(c[0] for c in self.coords), tuple(c[1] for c in self.coords), w)


def gen_workload(spec: WorkloadSpec, seed: int = 0) -> list:
    """Reproducible event stream: `spec.n` inserts with optional deletes and queries.

    A positive `max_live` forces a delete whenever that many objects are live.
    A positive `events` stops the stream at that many events instead.
    """
    spec.validate()
    rng = random.Random(seed)
    max_size = spec.max_size if spec.max_size is not None else spec.N / 8
    lo_log, hi_log = math.log(spec.min_size), math.log(max_size)

    def draw_edge():
        s = math.exp(rng.uniform(lo_log, hi_log))
        if spec.integer:
            s = float(min(max(round(s), math.ceil(spec.min_size)), math.floor(max_size)))
        return s

    def draw_start(s):
        x = rng.uniform(0, spec.N - s)
        return float(math.floor(x)) if spec.integer else x

    events = []
    live: list = []
    inserted = updates = 0
    while (len(events) < spec.events) if spec.events else (inserted < spec.n):
        full = spec.max_live and len(live) >= spec.max_live
        if live and (full or rng.random() < spec.churn):
            victim = live.pop(rng.randrange(len(live)))
            events.append(WorkloadEvent("delete", victim))
        else:
            edges = [draw_edge()] * spec.d if spec.cubes else [draw_edge() for _ in range(spec.d)]
            coords = []
            for s in edges:
                x = draw_start(s)
                coords.append([x, x + s])
            if spec.W > 1:
                w = float(rng.randint(1, int(spec.W))) if spec.integer else rng.uniform(1, spec.W)
            else:
                w = 1.0
            events.append(WorkloadEvent("insert", inserted, coords, w))
            live.append(inserted)
            inserted += 1
        updates += 1
        if spec.query_every and updates % spec.query_every == 0:
            events.append(WorkloadEvent("query_solution"))
    return events[:spec.events] if spec.events else events


def write_workload(events: Iterable[WorkloadEvent], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.to_json() + "\n")


def read_workload(path) -> list:
    with open(path) as fh:
        return [WorkloadEvent.from_json(line) for line in fh if line.strip()]


@dataclass
class RunConfig:
    algo: str = "uint"
    N: int = 1024
    d: int = 1
    eps: float = 0.25
    W: float = 1.0
    offsets: str = "random:1"
    seed: int = 0
    oracle: bool = False
    audit: bool = False

    def grid(self) -> GridConfig:
        return GridConfig(snap_space(self.N), self.d, snap_eps(self.eps))


@dataclass
class RunReport:
    config: dict
    latency_ns: dict = field(default_factory=dict)
    queries: list = field(default_factory=list)
    oracle_ratios: list = field(default_factory=list)
    violations: int = 0
    audits: int = 0
    anomalies: list = field(default_factory=list)
    schema: str = SCHEMA

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


_FACTORIES = {
    "uint": UnweightedIntervalEngine,
    "uhc": UnweightedHypercubeEngine,
    "whc": WeightedHypercubeEngine,
    "wint": WeightedIntervalEngine,
}


def make_engine(cfg: RunConfig):
    """An ensemble (or rectangle engine) for the configured algorithm and offsets."""
    if cfg.algo not in ALGOS:
        raise UsageError(f"unknown algo {cfg.algo!r}")
    if cfg.algo in ("uint", "wint") and cfg.d != 1:
        raise UsageError(f"{cfg.algo} is one-dimensional")
    grid = cfg.grid()
    if cfg.algo == "wrect":
        base = GridConfig(grid.N, 1, grid.eps)
        offsets = _offsets(base, cfg)
        return HyperrectangleEngine(grid, offsets, cfg.seed)
    return Ensemble(_FACTORIES[cfg.algo], grid, _offsets(grid, cfg))


def _offsets(grid: GridConfig, cfg: RunConfig) -> list:
    if cfg.offsets == "ensemble":
        return build_offsets(grid)
    if cfg.offsets.startswith("random:"):
        try:
            count = int(cfg.offsets.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad offsets {cfg.offsets!r}") from None
        if count < 1:
            raise UsageError("random offset count must be positive")
        return sample_offsets(grid, count, cfg.seed)
    raise UsageError(f"bad offsets {cfg.offsets!r}")


def best_solution(engine) -> list:
    """Solution of the best instance: weighted cubes pick by emitted weight."""
    if isinstance(engine, Ensemble) and isinstance(engine.engines[0], WeightedHypercubeEngine) \
            and not isinstance(engine.engines[0], WeightedIntervalEngine):
        return max((e.solution() for e in engine.engines), key=lambda s: sum(b.weight for b in s))
    return engine.solution()


def oracle_value(cfg: RunConfig, live: list) -> Optional[float]:
    items = live if cfg.algo in ("whc", "wint", "wrect") else [Box(b.id, b.lo, b.hi, 1.0) for b in live]
    if cfg.d == 1:
        return exact_interval_weight(items)
    if len(items) <= BOX_LIMIT:
        return exact_box_weight(items)
    return None


def point_sol_holds(engine: WeightedHypercubeEngine) -> bool:
    """w(P(root)) <= 2^(d+1) times the emitted weight, up to float rounding."""
    return engine.point_sol_gap() >= -1e-9 * max(1.0, engine.weight_estimate())


def _stats(samples: list) -> dict:
    if not samples:
        return {"count": 0, "p50": 0, "p95": 0, "max": 0, "mean": 0}
    arr = np.array(samples, dtype=float)
    return {"count": len(samples), "p50": float(np.percentile(arr, 50)),
            "p95": float(np.percentile(arr, 95)), "max": float(arr.max()), "mean": float(arr.mean())}


def run_workload(cfg: RunConfig, events: Iterable[WorkloadEvent], engine=None) -> RunReport:
    engine = engine if engine is not None else make_engine(cfg)
    grid = cfg.grid()
    report = RunReport(config={"algo": cfg.algo, "N": grid.N, "d": cfg.d, "eps": grid.eps,
                               "W": cfg.W, "offsets": cfg.offsets, "seed": cfg.seed,
                               "oracle": cfg.oracle, "audit": cfg.audit})
    audit = cfg.audit and cfg.algo == "whc"
    times = {"insert": [], "delete": []}
    live: dict = {}
    weighted = cfg.algo in ("whc", "wint", "wrect")
    for i, ev in enumerate(events):
        if ev.op == "insert":
            if len(ev.coords) != cfg.d:
                raise UsageError(f"event {i}: expected {cfg.d} coordinate pairs")
            box = ev.box()
            t0 = time.perf_counter_ns()
            engine.insert(box)
            times["insert"].append(time.perf_counter_ns() - t0)
            live[box.id] = box
        elif ev.op == "delete":
            if ev.id not in live:
                raise UsageError(f"event {i}: delete of unknown id {ev.id}")
            t0 = time.perf_counter_ns()
            engine.delete(ev.id)
            times["delete"].append(time.perf_counter_ns() - t0)
            del live[ev.id]
        else:
            report.queries.append(_query(cfg, engine, ev.op, i, list(live.values()), weighted, report))
            continue
        if audit:
            report.audits += 1
            report.violations += sum(1 for e in engine.engines if not point_sol_holds(e))
    report.latency_ns = {op: _stats(v) for op, v in times.items()}
    members = engine.engines if isinstance(engine, Ensemble) else []
    for e in members:
        report.anomalies.extend(str(a) for a in e.anomalies)
    return report


def _query(cfg, engine, op, index, live, weighted, report) -> dict:
    rec = {"event": index, "op": op}
    if op == "query_size":
        rec["value"] = float(engine.value())
        return rec
    sol = best_solution(engine)
    w = float(sum(b.weight for b in sol)) if weighted else float(len(sol))
    rec["value"] = w
    if op == "query_solution":
        rec["ids"] = sorted(b.id for b in sol)
    bad = conflicting_pairs(sol)
    if bad:
        report.violations += len(bad)
    if cfg.oracle:
        if cfg.algo == "whc":
            report.violations += sum(1 for e in engine.engines if not point_sol_holds(e))
        opt = oracle_value(cfg, live)
        if opt is not None and opt > 0:
            report.oracle_ratios.append(opt / w if w > 0 else math.inf)
    return rec


@dataclass
class MatrixConfig:
    """The validity sweep: every algorithm, dimension, epsilon and seed."""
    algos: tuple = ALGOS
    dims: tuple = (1, 2)
    eps: tuple = (0.5, 0.25, 0.125)
    seeds: tuple = (0, 1, 2, 3, 4)
    events: int = 5000
    N: int = 64
    W: float = 16.0
    churn: float = 0.4
    max_live: int = 96
    query_every: int = 250

    def cells(self):
        for algo in self.algos:
            for d in self.dims:
                if algo in ("uint", "wint") and d != 1:
                    continue
                for eps in self.eps:
                    for seed in self.seeds:
                        yield algo, d, eps, seed


def matrix_run(mc: MatrixConfig, algo: str, d: int, eps: float, seed: int) -> RunReport:
    """One cell of the sweep; weighted cubes are audited after every update."""
    weighted = algo in ("whc", "wint", "wrect")
    spec = WorkloadSpec(n=0, events=mc.events, d=d, N=mc.N, W=mc.W if weighted else 1.0,
                        churn=mc.churn, query_every=mc.query_every, cubes=algo != "wrect",
                        max_live=mc.max_live, max_size=mc.N / 8)
    events = gen_workload(spec, seed)
    cfg = RunConfig(algo, mc.N, d, eps, spec.W, "random:1", seed, audit=True)
    return run_workload(cfg, events)


def update_latency(n: int, updates: int = 2000, N: int = 1 << 20, eps: float = 0.25,
                   seed: int = 0) -> float:
    """Mean nanoseconds per update of an interval engine bulk-loaded with n intervals.

    Sizes are log-uniform in [1, N/8]; each timed step deletes a random live
    interval and inserts a fresh one.
    """
    rng = random.Random(seed)

    def draw(i):
        s = max(1, int(math.exp(rng.uniform(0, math.log(N / 8)))))
        x = rng.randint(0, N - s)
        return Box(i, (float(x),), (float(x + s),), 1.0)

    engine = UnweightedIntervalEngine(GridConfig(N, 1, eps))
    engine.load(draw(i) for i in range(n))
    ids = list(range(n))
    total = 0
    for k in range(updates // 2):
        victim = ids.pop(rng.randrange(len(ids)))
        box = draw(n + k)
        t0 = time.perf_counter_ns()
        engine.delete(victim)
        engine.insert(box)
        total += time.perf_counter_ns() - t0
        ids.append(box.id)
    return total / (2 * (updates // 2))
