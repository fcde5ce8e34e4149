"""Experiment grids: policy x oracle x instance, aggregated competitive ratios."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .instances import IngestionSpec, LowerBoundSpec, ingest_csv, lower_bound_instance, read_trace, zipf_trace
from .oracles import OracleSpec
from .policies import RNG_ALGORITHM, ConfigError, PolicyConfig, SimReport, fif_misses, simulate
from .trace import Trace

SCHEMA_VERSION = 1
DATA_DIR_ENV = "PARSICACHE_DATA_DIR"
ROW_COLUMNS = ("policy", "oracle", "ratio", "queries", "query_fraction", "eta", "inversions", "instances")
INSTANCE_COLUMNS = ("name", "length", "distinct", "opt_cost", "trivial")
BREAKDOWN_COLUMNS = ("instance", "policy", "oracle", "ratio", "misses", "queries", "eta", "inversions", "runs")
SWEEP_COLUMNS = ("b", "sigma", "ratio", "stderr")


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "."))


def _resolve(path: str, base: Path | None) -> Path:
    p = Path(path)
    if p.is_absolute() or base is None:
        return p
    return base / p


@dataclass
class ExperimentConfig:
    instances: list[dict]
    k: int
    policies: list[PolicyConfig]
    oracles: list[OracleSpec] = field(default_factory=lambda: [OracleSpec()])
    repetitions: int = 10
    output: str | None = None
    format: str = "json"
    workers: int = 1

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.instances:
            raise ConfigError("no instances configured")
        if not self.oracles:
            raise ConfigError("no oracles configured")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.format!r}")
        for p in self.policies:
            p.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            out = d.get("output") or {}
            if isinstance(out, str):
                out = {"path": out}
            cfg = cls(
                instances=list(d["instances"]),
                k=int(d["k"]),
                policies=[PolicyConfig.from_dict(p) for p in d["policies"]],
                oracles=[OracleSpec.from_dict(o) for o in d.get("oracles", [{"kind": "perfect"}])],
                repetitions=int(d.get("repetitions", 10)),
                output=out.get("path"),
                format=out.get("format", "json"),
                workers=int(d.get("workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad experiment config: {e}") from e
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from e
        return cls.from_dict(d)


@dataclass(frozen=True)
class Instance:
    name: str
    trace: Trace
    trivial: bool = False


def load_instance(src: dict, k: int, base: Path | None = None) -> Instance:
    """Materialize one instance source; fewer than `k` distinct pages (or
    ``min_distinct`` for CSV sources) marks it trivial."""
    kind = src.get("type")
    if kind == "zipf":
        tr = zipf_trace(int(src["length"]), int(src["universe"]), float(src.get("s", 1.0)), int(src.get("seed", 0)))
        name = src.get("name", f"zipf(n={src['length']},u={src['universe']},s={src.get('s', 1.0)},seed={src.get('seed', 0)})")
        return Instance(name, tr, tr.universe_size < k)
    if kind == "lower_bound":
        spec = LowerBoundSpec(int(src.get("k", k)), int(src["H"]), int(src.get("seed", 0)))
        tr = lower_bound_instance(spec)
        return Instance(src.get("name", f"lower_bound(k={spec.k},H={spec.H},seed={spec.seed})"), tr, tr.universe_size < k)
    if kind == "csv":
        path = _resolve(src["path"], base)
        res = ingest_csv(
            IngestionSpec(path, src["column"], int(src.get("limit", 25000)), src.get("min_distinct")), k=k
        )
        return Instance(src.get("name", path.name), res.trace, res.trivial)
    if kind == "trace":
        path = _resolve(src["path"], base)
        tr = read_trace(path)
        return Instance(src.get("name", path.name), tr, tr.universe_size < k)
    raise ConfigError(f"unknown instance type {kind!r}")


@dataclass(frozen=True)
class CellResult:
    misses: int
    queries: int
    eta: float
    inversions: int


def _run_cell(args) -> CellResult:
    policy, trace, k, oracle, opt = args
    r = simulate(policy, trace, k, oracle, opt_cost=opt)
    return CellResult(r.misses, r.queries, r.eta, r.inversions)


def instance_oracle(spec: OracleSpec, index: int) -> OracleSpec:
    """Noise seed for instance `index`; identical for every policy and repetition."""
    return OracleSpec(spec.kind, spec.sigma, spec.seed + index, spec.resample)


def policy_seeds(policy: PolicyConfig, repetitions: int) -> list[int]:
    if not policy.randomized:
        return [policy.seed]
    return [policy.seed + r for r in range(repetitions)]


@dataclass
class ResultTable:
    rows: list[dict]
    instances: list[dict] = field(default_factory=list)
    breakdown: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def run_experiment(config: ExperimentConfig, base: Path | None = None) -> ResultTable:
    config.validate()
    base = data_dir() if base is None else base
    loaded = [load_instance(src, config.k, base) for src in config.instances]
    active = [(i, inst) for i, inst in enumerate(loaded) if not inst.trivial]
    if not active:
        raise ConfigError("no non-trivial instances")
    opts = {i: fif_misses(inst.trace, config.k) for i, inst in active}

    # oracle-free policies are run once per instance and reused across oracles
    keys: list[tuple] = []
    tasks: list[tuple] = []
    for i, inst in active:
        for pi, pol in enumerate(config.policies):
            for oi, osp in enumerate(config.oracles if pol.uses_oracle else config.oracles[:1]):
                for seed in policy_seeds(pol, config.repetitions):
                    keys.append((i, pi, oi if pol.uses_oracle else -1, seed))
                    tasks.append((pol.with_seed(seed), inst.trace, config.k, instance_oracle(osp, i), opts[i]))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_run_cell, tasks, chunksize=1))
    else:
        results = [_run_cell(t) for t in tasks]
    cells = dict(zip(keys, results))

    rows, breakdown = [], []
    for pi, pol in enumerate(config.policies):
        for oi, osp in enumerate(config.oracles):
            okey = oi if pol.uses_oracle else -1
            per_inst = []
            for i, inst in active:
                runs = [cells[(i, pi, okey, s)] for s in policy_seeds(pol, config.repetitions)]
                n = len(inst.trace)
                rec = {
                    "instance": inst.name,
                    "policy": pol.label,
                    "oracle": osp.label,
                    "ratio": float(np.mean([c.misses / opts[i] for c in runs])),
                    "misses": float(np.mean([c.misses for c in runs])),
                    "queries": float(np.mean([c.queries for c in runs])),
                    "eta": float(np.mean([c.eta for c in runs])),
                    "inversions": float(np.mean([c.inversions for c in runs])),
                    "runs": len(runs),
                    "_fraction": float(np.mean([c.queries / n for c in runs])),
                }
                per_inst.append(rec)
            rows.append(
                {
                    "policy": pol.label,
                    "oracle": osp.label,
                    "ratio": float(np.mean([r["ratio"] for r in per_inst])),
                    "queries": float(np.mean([r["queries"] for r in per_inst])),
                    "query_fraction": float(np.mean([r["_fraction"] for r in per_inst])),
                    "eta": float(np.mean([r["eta"] for r in per_inst])),
                    "inversions": float(np.mean([r["inversions"] for r in per_inst])),
                    "instances": len(per_inst),
                }
            )
            for r in per_inst:
                r.pop("_fraction")
                breakdown.append(r)
    instances = [
        {
            "name": inst.name,
            "length": len(inst.trace),
            "distinct": inst.trace.universe_size,
            "opt_cost": opts.get(i),
            "trivial": inst.trivial,
        }
        for i, inst in enumerate(loaded)
    ]
    metadata = {
        "k": config.k,
        "repetitions": config.repetitions,
        "rng": RNG_ALGORITHM,
        "ratio": "per-instance misses/opt_cost, mean over policy seeds, then mean over non-trivial instances",
        "oracle_seed": "oracle seed + instance index, shared by all policies and repetitions",
        "policies": [p.to_dict() for p in config.policies],
        "oracles": [o.to_dict() for o in config.oracles],
    }
    return ResultTable(rows, instances, breakdown, metadata)


# ------------------------------------------------------------------- output


def _fmt(x):
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return float(f"{x:.6g}")
    return x


def _rounded(rec: dict) -> dict:
    return {key: _fmt(v) for key, v in rec.items()}


def results_to_json(table: ResultTable) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "metadata": table.metadata,
        "columns": list(ROW_COLUMNS),
        "rows": [{c: _fmt(r[c]) for c in ROW_COLUMNS} for r in table.rows],
        "instances": [{c: _fmt(r[c]) for c in INSTANCE_COLUMNS} for r in table.instances],
        "breakdown": [{c: _fmt(r[c]) for c in BREAKDOWN_COLUMNS} for r in table.breakdown],
    }
    return json.dumps(doc, indent=1) + "\n"


def results_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in table.rows:
        w.writerow([f"{r[c]:.6g}" if isinstance(r[c], float) else r[c] for c in ROW_COLUMNS])
    return buf.getvalue()


def emit_results(table: ResultTable, path: str | Path, fmt: str = "json") -> Path:
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown output format {fmt!r}")
    path = Path(path)
    text = results_to_json(table) if fmt == "json" else results_to_csv(table)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def load_results(path: str | Path) -> ResultTable:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported results schema {doc.get('schema')!r}")
    return ResultTable(doc["rows"], doc["instances"], doc["breakdown"], doc["metadata"])


# ------------------------------------------------------------- sweeps etc.


def query_budget_report(report: SimReport, trace: Trace) -> tuple[float, float]:
    """(queries per request, queries per miss)."""
    per_miss = report.queries / report.misses if report.misses else 0.0
    return report.queries / len(trace), per_miss


def sweep_b_sigma(
    b_values: Sequence[int],
    sigma_values: Sequence[float],
    instances: Sequence[Trace],
    k: int,
    repetitions: int = 10,
    oracle_seed: int = 0,
    policy_seed: int = 0,
    workers: int = 1,
) -> list[dict]:
    """Mean AdaptiveQuery-b ratio per (b, sigma) cell with its standard error."""
    if not b_values or not sigma_values or not instances:
        raise ConfigError("empty sweep grid")
    opts = [fif_misses(tr, k) for tr in instances]
    keys, tasks = [], []
    for b in b_values:
        for sigma in sigma_values:
            for i, tr in enumerate(instances):
                osp = OracleSpec("lognormal", float(sigma), oracle_seed + i)
                for r in range(repetitions):
                    keys.append((b, sigma, i))
                    tasks.append((PolicyConfig("AdaptiveQuery", b=b, seed=policy_seed + r), tr, k, osp, opts[i]))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_cell, tasks, chunksize=1))
    else:
        results = [_run_cell(t) for t in tasks]
    ratios: dict[tuple, list[float]] = {}
    for (b, sigma, i), c in zip(keys, results):
        ratios.setdefault((b, sigma), []).append(c.misses / opts[i])
    out = []
    for b in b_values:
        for sigma in sigma_values:
            v = np.array(ratios[(b, sigma)])
            se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
            out.append({"b": b, "sigma": float(sigma), "ratio": float(v.mean()), "stderr": se})
    return out


def write_sweep_csv(rows: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r["b"], f"{r['sigma']:.6g}", f"{r['ratio']:.6g}", f"{r['stderr']:.6g}"])
