"""Command-line entry point: ``parsicache {run,lb-gen,sweep,ingest}``.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    ExperimentConfig,
    data_dir,
    emit_results,
    results_to_csv,
    results_to_json,
    run_experiment,
    sweep_b_sigma,
    write_sweep_csv,
)
from .instances import (
    EmptyInputError,
    IngestionSpec,
    LowerBoundSpec,
    MissingColumnError,
    MissingFileError,
    export_trace,
    ingest_csv,
    lower_bound_instance,
    read_trace,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    out = args.out or cfg.output
    fmt = args.format or cfg.format
    table = run_experiment(cfg)
    if out:
        emit_results(table, out, fmt)
    else:
        sys.stdout.write(results_to_json(table) if fmt == "json" else results_to_csv(table))
    return EXIT_OK


def _cmd_lb_gen(args) -> int:
    tr = lower_bound_instance(LowerBoundSpec(args.k, args.phases, args.seed))
    export_trace(tr, args.out)
    print(f"wrote {len(tr)} requests ({tr.universe_size} pages) to {args.out}")
    return EXIT_OK


def _load_any(path: str, column: str | None, limit: int):
    p = Path(path)
    if not p.is_absolute() and not p.exists():
        p = data_dir() / p
    if p.suffix == ".csv":
        if column is None:
            raise ConfigError(f"{p}: --column is required for CSV traces")
        return ingest_csv(IngestionSpec(p, column, limit)).trace
    if not p.is_file():
        raise MissingFileError(f"no such file: {p}")
    return read_trace(p)


def _cmd_sweep(args) -> int:
    traces = [_load_any(t, args.column, args.limit) for t in args.traces]
    rows = sweep_b_sigma(
        args.b, args.sigma, traces, args.k, args.repetitions,
        oracle_seed=args.seed, policy_seed=args.seed, workers=args.workers,
    )
    if args.out:
        write_sweep_csv(rows, args.out)
    else:
        for r in rows:
            print(f"{r['b']},{r['sigma']:.6g},{r['ratio']:.6g},{r['stderr']:.6g}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    res = ingest_csv(IngestionSpec(args.csv, args.column, args.limit), k=args.k)
    print(
        json.dumps(
            {"requests": len(res.trace), "distinct": res.distinct, "skipped": res.skipped, "trivial": res.trivial}
        )
    )
    if args.out:
        export_trace(res.trace, args.out, res.intern)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parsicache", description="Trace-driven caching experiments with prediction oracles.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run an experiment grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("lb-gen", help="write a lower-bound instance trace")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--phases", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lb_gen)

    p = sub.add_parser("sweep", help="AdaptiveQuery ratio over a (b, sigma) grid")
    p.add_argument("--b", type=int, nargs="+", required=True)
    p.add_argument("--sigma", type=float, nargs="+", required=True)
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--column", help="page-key column for .csv traces")
    p.add_argument("--limit", type=int, default=25000)
    p.add_argument("--k", type=int, default=500)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ingest", help="convert a CSV event log into a trace")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--limit", type=int, default=25000)
    p.add_argument("--k", type=int, help="flag the instance trivial below k distinct pages")
    p.add_argument("--out", help="trace file; the intern map goes to <out>.intern.json")
    p.set_defaults(func=_cmd_ingest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MissingColumnError, ConfigError, ValueError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingFileError, EmptyInputError, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
