"""Command line: generate workloads and replay them against an engine.

Exit codes: 0 success, 1 usage error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (ALGOS, RunConfig, UsageError, WorkloadSpec, gen_workload, read_workload,
                    run_workload, write_workload)
from .geometry import ContractError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _workload_flags(p) -> None:
    p.add_argument("--n", type=int, default=1000, help="number of inserts")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--space", type=int, default=1024, help="coordinate bound N")
    p.add_argument("--weights", type=float, default=1.0, help="max weight W")
    p.add_argument("--min-size", type=float, default=1.0)
    p.add_argument("--max-size", type=float, default=None)
    p.add_argument("--churn", type=float, default=0.0, help="delete probability per step")
    p.add_argument("--query-every", type=int, default=0)
    p.add_argument("--max-live", type=int, default=0, help="force a delete at this many live objects")
    p.add_argument("--events", type=int, default=0, help="stop after this many events")
    p.add_argument("--rects", action="store_true", help="independent edge lengths per axis")
    p.add_argument("--real", action="store_true", help="real rather than integer coordinates")
    p.add_argument("--seed", type=int, default=0)


def _spec(args) -> WorkloadSpec:
    return WorkloadSpec(n=args.n, d=args.dim, N=args.space, min_size=args.min_size,
                        max_size=args.max_size, W=args.weights, churn=args.churn,
                        query_every=args.query_every, cubes=not args.rects, integer=not args.real,
                        max_live=args.max_live, events=args.events)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geodynis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a JSON Lines workload")
    _workload_flags(gen)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="replay a workload and write a JSON report")
    _workload_flags(run)
    run.add_argument("--algo", choices=ALGOS, required=True)
    run.add_argument("--epsilon", type=float, default=0.25)
    run.add_argument("--offsets", default="random:1", help="ensemble or random:<count>")
    run.add_argument("--workload", help="JSON Lines file; generated from the flags if omitted")
    run.add_argument("--oracle", action="store_true", help="check queries against exact optima")
    run.add_argument("--audit", action="store_true",
                     help="check the weighted-cube point bound after every update")
    run.add_argument("--out", help="report path (stdout if omitted)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            write_workload(gen_workload(_spec(args), args.seed), args.out)
            return 0
        events = read_workload(args.workload) if args.workload else gen_workload(_spec(args), args.seed)
        cfg = RunConfig(algo=args.algo, N=args.space, d=args.dim, eps=args.epsilon, W=args.weights,
                        offsets=args.offsets, seed=args.seed, oracle=args.oracle, audit=args.audit)
        report = run_workload(cfg, events)
    except (UsageError, ContractError, OSError) as exc:
        print(f"geodynis: {exc}", file=sys.stderr)
        return 1
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 2 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())
