"""Mean update latency of the interval engine as the live set grows.

A polylogarithmic update time should keep the per-update cost within a small
factor between n=4096 and n=65536.
"""

import argparse

from geodynis.bench import update_latency


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="*", default=[4096, 16384, 65536])
    ap.add_argument("--updates", type=int, default=2000)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    base = None
    print(f"{'n':>8} {'us/update':>10} {'ratio':>6}")
    for n in args.sizes:
        ns = update_latency(n, args.updates, eps=args.eps, seed=args.seed)
        base = base or ns
        print(f"{n:>8} {ns / 1e3:>10.0f} {ns / base:>6.2f}", flush=True)


if __name__ == "__main__":
    main()
