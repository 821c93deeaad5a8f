import json

import pytest

from geodynis.bench import (ALGOS, SCHEMA, MatrixConfig, RunConfig, UsageError, WorkloadEvent,
                            WorkloadSpec, gen_workload, matrix_run, read_workload, run_workload,
                            write_workload)
from geodynis.cli import main


def dims(algo):
    return (1,) if algo in ("uint", "wint") else (1, 2)


def test_gen_is_deterministic(tmp_path):
    spec = WorkloadSpec(n=200, d=2, N=64, churn=0.3, W=8, query_every=20)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_workload(gen_workload(spec, 5), a)
    write_workload(gen_workload(spec, 5), b)
    assert a.read_bytes() == b.read_bytes()
    assert [e.to_json() for e in read_workload(a)] == [e.to_json() for e in gen_workload(spec, 5)]


def test_gen_shape():
    events = gen_workload(WorkloadSpec(n=1000, d=2, N=1024), 0)
    assert len(events) == 1000 and all(e.op == "insert" for e in events)
    for e in events:
        assert len(e.coords) == 2
        assert all(0 <= lo < hi <= 1024 and hi - lo >= 1 for lo, hi in e.coords)


def test_gen_live_cap_and_length():
    events = gen_workload(WorkloadSpec(n=0, events=500, N=64, churn=0.2, max_live=10), 1)
    assert len(events) == 500
    live = set()
    for e in events:
        if e.op == "insert":
            live.add(e.id)
        else:
            live.remove(e.id)
        assert len(live) <= 10


@pytest.mark.parametrize("bad", [dict(N=1), dict(churn=1.0), dict(W=0.5),
                                 dict(min_size=8, max_size=4), dict(max_live=-1)])
def test_bad_spec(bad):
    with pytest.raises(UsageError):
        gen_workload(WorkloadSpec(**bad))


@pytest.mark.parametrize("line", ['{"op":"insert","id":1,"coords":[[0,1]],"color":3}',
                                  '{"op":"flip"}', '{"op":"delete"}', "not json"])
def test_strict_events(line):
    with pytest.raises(UsageError):
        WorkloadEvent.from_json(line)


@pytest.mark.parametrize("algo", ALGOS)
def test_empty_stream(algo):
    rep = run_workload(RunConfig(algo, 64, dims(algo)[-1], 0.25), [])
    assert rep.violations == 0 and rep.queries == [] and rep.schema == SCHEMA


@pytest.mark.parametrize("algo", ALGOS)
def test_single_object(algo):
    d = dims(algo)[-1]
    events = [WorkloadEvent("insert", 7, [[2, 6]] * d, 3.0), WorkloadEvent("query_solution")]
    rep = run_workload(RunConfig(algo, 64, d, 0.25, W=3.0), events)
    assert rep.queries[0]["ids"] == [7]


def test_dimension_mismatch():
    events = [WorkloadEvent("insert", 1, [[0, 2], [0, 2]])]
    with pytest.raises(UsageError):
        run_workload(RunConfig("uhc", 64, 1, 0.25), events)
    with pytest.raises(UsageError):
        run_workload(RunConfig("uint", 64, 2, 0.25), [])


def test_oracle_mode_uint():
    spec = WorkloadSpec(n=200, N=256, churn=0.2, query_every=25, max_size=32)
    rep = run_workload(RunConfig("uint", 256, 1, 0.125, offsets="random:4", oracle=True),
                       gen_workload(spec, 3))
    assert rep.violations == 0 and rep.oracle_ratios
    assert max(rep.oracle_ratios) <= 1 + 3 * 0.125


def test_replay_determinism():
    spec = WorkloadSpec(n=150, d=2, N=64, churn=0.3, W=16, query_every=30)
    events = gen_workload(spec, 2)
    cfg = RunConfig("whc", 64, 2, 0.25, W=16, offsets="random:2", seed=2)
    a, b = run_workload(cfg, events), run_workload(cfg, events)
    assert a.queries == b.queries


def test_audit_counts_updates():
    mc = MatrixConfig(events=300)
    rep = matrix_run(mc, "whc", 2, 0.25, 0)
    assert rep.violations == 0 and rep.audits == 300 - len(rep.queries)


def test_cli_gen_and_run(tmp_path, capsys):
    wl = tmp_path / "w.jsonl"
    out = tmp_path / "r.json"
    assert main(["gen", "--n", "120", "--space", "64", "--churn", "0.2", "--query-every", "20",
                 "--out", str(wl)]) == 0
    assert main(["run", "--algo", "uint", "--space", "64", "--epsilon", "0.25", "--oracle",
                 "--workload", str(wl), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["schema"] == SCHEMA and report["violations"] == 0
    assert set(report["latency_ns"]["insert"]) == {"count", "p50", "p95", "max", "mean"}


@pytest.mark.parametrize("argv", [["run", "--algo", "nope"], ["run", "--algo", "uint", "--dim", "2"],
                                  ["run", "--algo", "uhc", "--offsets", "weird"], []])
def test_cli_usage_errors(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_cli_violation_exit_code(monkeypatch, tmp_path):
    import geodynis.cli as cli

    def broken(cfg, events):
        rep = run_workload(cfg, [])
        rep.violations = 1
        return rep

    monkeypatch.setattr(cli, "run_workload", broken)
    assert cli.main(["run", "--algo", "uint", "--n", "5", "--out", str(tmp_path / "r.json")]) == 2
