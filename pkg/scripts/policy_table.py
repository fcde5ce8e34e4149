"""Competitive ratio of every policy under lognormal noise of increasing sigma.

Uses bike-share CSVs when --csv-dir is given, otherwise seeded Zipf traces.

    python3 scripts/policy_table.py --out results/policy_table.csv
    python3 scripts/policy_table.py --csv-dir data/2018 --column "start station id"
"""
import argparse
import sys
from pathlib import Path

from parsicache.harness import ExperimentConfig, emit_results, results_to_csv, run_experiment

POLICIES = [
    {"policy": "RandomMarker"},
    {"policy": "LRU"},
    {"policy": "BlindOracle"},
    {"policy": "LVMarker"},
    {"policy": "RohatgiMarker"},
    {"policy": "RobustOracle"},
    {"policy": "NaiveEviction", "epsilon": 0.1},
    {"policy": "AdaptiveQuery", "b": 2},
    {"policy": "AdaptiveQuery", "b": 8},
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv-dir")
    ap.add_argument("--column", help="page-key column of the CSVs")
    ap.add_argument("--zipf", type=int, default=5, help="number of Zipf traces when no CSVs are given")
    ap.add_argument("--sigma", type=float, nargs="+", default=[0, 2, 4, 6, 8, 10])
    ap.add_argument("--k", type=int, default=500)
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    if args.csv_dir:
        if not args.column:
            ap.error("--column is required with --csv-dir")
        instances = [
            {"type": "csv", "path": str(p), "column": args.column, "limit": 25000}
            for p in sorted(Path(args.csv_dir).glob("*.csv"))
        ]
    else:
        instances = [
            {"type": "zipf", "length": 25000, "universe": 2000, "s": 0.8, "seed": s} for s in range(args.zipf)
        ]
    oracles = [{"kind": "lognormal", "sigma": s, "seed": 0} for s in args.sigma]
    cfg = ExperimentConfig.from_dict(
        {
            "instances": instances,
            "k": args.k,
            "policies": POLICIES,
            "oracles": oracles,
            "repetitions": args.repetitions,
            "workers": args.workers,
        }
    )
    table = run_experiment(cfg)

    # wide view: one line per policy, one column per sigma
    ratio = {(r["policy"], r["oracle"]): r for r in table.rows}
    labels = list(dict.fromkeys(r["policy"] for r in table.rows))
    olabels = list(dict.fromkeys(r["oracle"] for r in table.rows))
    print(f"{'policy':<26}" + "".join(f"{o:>16}" for o in olabels) + f"{'queries/|G|':>14}")
    for p in labels:
        cells = "".join(f"{ratio[(p, o)]['ratio']:>16.3f}" for o in olabels)
        print(f"{p:<26}{cells}{ratio[(p, olabels[0])]['query_fraction']:>14.3f}")

    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        emit_results(table, args.out, "json" if args.out.endswith(".json") else "csv")
    else:
        sys.stdout.write("\n" + results_to_csv(table))


if __name__ == "__main__":
    main()
