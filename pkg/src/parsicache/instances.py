"""Trace sources: the adversarial lower-bound family, Zipf workloads, CSV logs."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .trace import Trace, build_trace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LowerBoundSpec:
    k: int
    H: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 2 or self.H < 1:
            raise ValueError("need k >= 2 and H >= 1")

    @property
    def phase_length(self) -> int:
        """Length of every phase after the first."""
        k = self.k
        return 1 + sum(m * k + 1 for m in range(1, k))

    @property
    def length(self) -> int:
        return self.k + (self.H - 1) * self.phase_length


def lower_bound_phase(f: int, perm: Sequence[int], k: int) -> list[int]:
    """One phase for clean page `f` and permutation ``perm = (p_1, ..., p_k)``.

    Stale pages arrive in the order p_k, ..., p_2, each after k repetitions
    of the prefix seen so far; p_1 is never requested.
    """
    out = [f]
    prefix = [f]
    for i in range(k, 1, -1):
        out.extend(prefix * k)
        out.append(perm[i - 1])
        prefix.append(perm[i - 1])
    return out


def lower_bound_instance(spec: LowerBoundSpec, permutations: Sequence[Sequence[int]] | None = None) -> Trace:
    """Adversarial instance: k fresh pages, then H-1 phases of one clean page each.

    `permutations` overrides the seeded draws (one per phase after the
    first, each a permutation of the previous phase's pages).
    """
    k = spec.k
    rng = np.random.default_rng(spec.seed)
    pages = list(range(k))
    reqs = list(pages)
    fresh = k
    for h in range(spec.H - 1):
        if permutations is not None:
            perm = list(permutations[h])
            if sorted(perm) != sorted(pages):
                raise ValueError("permutation must cover the previous phase's pages")
        else:
            perm = [pages[i] for i in rng.permutation(k)]
        f = fresh
        fresh += 1
        reqs.extend(lower_bound_phase(f, perm, k))
        pages = [f] + perm[1:]
    return build_trace(reqs)


def zipf_trace(length: int, universe: int, s: float, seed: int = 0) -> Trace:
    """i.i.d. requests with P(page i) proportional to 1/(i+1)^s; page 0 is hottest."""
    if length < 1 or universe < 1 or s < 0:
        raise ValueError("need length >= 1, universe >= 1, s >= 0")
    w = 1.0 / np.arange(1, universe + 1, dtype=float) ** s
    rng = np.random.default_rng(seed)
    return build_trace(rng.choice(universe, size=length, p=w / w.sum()).tolist())


# ---------------------------------------------------------------- CSV ingest


class IngestError(Exception):
    code = "ingest"


class MissingFileError(IngestError):
    code = "missing_file"


class MissingColumnError(IngestError):
    code = "missing_column"


class EmptyInputError(IngestError):
    code = "no_rows"


@dataclass(frozen=True)
class IngestionSpec:
    path: str | Path
    column: str
    limit: int = 25000
    min_distinct: int | None = None

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError("limit must be >= 1")


@dataclass
class IngestResult:
    trace: Trace
    intern: dict[str, int]
    skipped: int = 0
    min_distinct: int | None = None

    @property
    def distinct(self) -> int:
        return self.trace.universe_size

    @property
    def trivial(self) -> bool:
        return self.min_distinct is not None and self.distinct < self.min_distinct


def ingest_csv(spec: IngestionSpec, k: int | None = None) -> IngestResult:
    """Read page keys from one column, interning them to dense ids in first-seen order.

    Rows whose key is missing or empty are skipped and counted. The
    triviality threshold is ``spec.min_distinct``, falling back to `k`.
    """
    path = Path(spec.path)
    if not path.is_file():
        raise MissingFileError(f"no such file: {path}")
    intern: dict[str, int] = {}
    reqs: list[int] = []
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path}: no header row")
        if spec.column not in reader.fieldnames:
            raise MissingColumnError(f"{path}: column {spec.column!r} not in {reader.fieldnames}")
        for row in reader:
            key = row.get(spec.column)
            if key is None or key == "" or None in row:
                skipped += 1
                continue
            if key not in intern:
                intern[key] = len(intern)
            reqs.append(intern[key])
            if len(reqs) >= spec.limit:
                break
    if skipped:
        log.warning("%s: skipped %d malformed rows", path, skipped)
    if not reqs:
        raise EmptyInputError(f"{path}: no usable rows")
    used = set(reqs)
    intern = {key: i for key, i in intern.items() if i in used}
    md = spec.min_distinct if spec.min_distinct is not None else k
    return IngestResult(build_trace(reqs), intern, skipped, md)


def export_trace(trace: Trace, path: str | Path, intern: dict[str, int] | None = None) -> None:
    """Write one page id per line, plus ``<path>.intern.json`` when a map is given."""
    path = Path(path)
    path.write_text("".join(f"{p}\n" for p in trace.requests))
    if intern is not None:
        Path(f"{path}.intern.json").write_text(json.dumps(intern, indent=1, sort_keys=True) + "\n")


def read_trace(path: str | Path) -> Trace:
    with open(path) as fh:
        return build_trace([int(line) for line in fh if line.strip()])


def export_csv(trace: Trace, path: str | Path, column: str = "page", intern: dict[str, int] | None = None) -> None:
    """Write the trace as a one-column CSV; keys are un-interned when a map is given."""
    names = {i: key for key, i in intern.items()} if intern else {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([column])
        for p in trace.requests:
            w.writerow([names.get(p, p)])
