"""Run the validity sweep and print one line per run plus a summary."""

import argparse
import json
import time

from geodynis.bench import MatrixConfig, matrix_run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--events", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--algos", nargs="*", default=None)
    ap.add_argument("--out", default=None, help="write one JSON record per run")
    args = ap.parse_args()
    mc = MatrixConfig(events=args.events, seeds=tuple(range(args.seeds)))
    if args.algos:
        mc.algos = tuple(args.algos)
    start = time.perf_counter()
    rows = []
    for algo, d, eps, seed in mc.cells():
        t0 = time.perf_counter()
        rep = matrix_run(mc, algo, d, eps, seed)
        row = {"algo": algo, "d": d, "eps": eps, "seed": seed, "violations": rep.violations,
               "audits": rep.audits, "anomalies": len(rep.anomalies),
               "seconds": round(time.perf_counter() - t0, 2)}
        rows.append(row)
        print(json.dumps(row), flush=True)
    total = time.perf_counter() - start
    bad = sum(r["violations"] for r in rows)
    print(f"runs={len(rows)} violations={bad} seconds={total:.1f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.writelines(json.dumps(r) + "\n" for r in rows)


if __name__ == "__main__":
    main()
