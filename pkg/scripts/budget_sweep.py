"""AdaptiveQuery ratio over a grid of query budgets b and noise levels sigma.

Writes long-format CSV (b, sigma, ratio, stderr) for plotting elsewhere.

    python3 scripts/budget_sweep.py --out results/budget_sweep.csv
"""
import argparse

from parsicache.harness import sweep_b_sigma, write_sweep_csv
from parsicache.instances import zipf_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6, 7, 8])
    ap.add_argument("--sigma", type=float, nargs="+", default=[0, 1, 2, 3, 4, 5, 6])
    ap.add_argument("--zipf", type=int, default=5)
    ap.add_argument("--length", type=int, default=25000)
    ap.add_argument("--universe", type=int, default=2000)
    ap.add_argument("--s", type=float, default=0.8)
    ap.add_argument("--k", type=int, default=500)
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="budget_sweep.csv")
    args = ap.parse_args()

    traces = [zipf_trace(args.length, args.universe, args.s, seed=i) for i in range(args.zipf)]
    rows = sweep_b_sigma(args.b, args.sigma, traces, args.k, args.repetitions, workers=args.workers)
    write_sweep_csv(rows, args.out)
    for r in rows:
        print(f"b={r['b']:<3} sigma={r['sigma']:<5g} ratio={r['ratio']:.4f} +- {r['stderr']:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
