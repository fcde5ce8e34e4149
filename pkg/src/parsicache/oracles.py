"""Next-arrival prediction oracles with per-call logging.

Every call to :meth:`Oracle.query` appends a :class:`QueryRecord`; the log is
the only source used for the error ``eta`` and the inversion count.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .trace import Trace

ORACLE_KINDS = ("perfect", "lognormal", "mean_interval")


class QueryRecord(NamedTuple):
    page: int
    time: int
    predicted: float
    actual: int


class QueryLog:
    """Append-only list of query records."""

    def __init__(self, records: Iterable[QueryRecord] = ()):
        self._records: list[QueryRecord] = list(records)

    def append(self, rec: QueryRecord) -> None:
        self._records.append(rec)

    @property
    def records(self) -> tuple[QueryRecord, ...]:
        return tuple(self._records)

    @property
    def count(self) -> int:
        return len(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __eq__(self, other):
        if not isinstance(other, QueryLog):
            return NotImplemented
        return self._records == other._records

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["page", "time", "predicted", "actual"])
            for r in self._records:
                w.writerow([r.page, r.time, repr(r.predicted), r.actual])

    @classmethod
    def from_csv(cls, path) -> "QueryLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            QueryRecord(int(r["page"]), int(r["time"]), _num(r["predicted"]), int(r["actual"]))
            for r in rows
        )


def _num(s: str) -> float:
    try:
        return int(s)
    except ValueError:
        return float(s)


@dataclass(frozen=True)
class OracleSpec:
    kind: str = "perfect"
    sigma: float = 0.0
    seed: int = 0
    # draw fresh noise on every call instead of once per (page, next arrival)
    resample: bool = False

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def label(self) -> str:
        if self.kind == "lognormal":
            return f"lognormal(sigma={self.sigma:g})"
        return self.kind

    def build(self, trace: Trace) -> "Oracle":
        if self.kind == "perfect":
            return PerfectOracle(trace)
        if self.kind == "lognormal":
            return LognormalOracle(trace, self.sigma, self.seed, resample=self.resample)
        return MeanIntervalOracle(trace)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "seed": self.seed, "resample": self.resample}

    @classmethod
    def from_dict(cls, d: dict) -> "OracleSpec":
        return cls(
            kind=d.get("kind", "perfect"),
            sigma=float(d.get("sigma", 0.0)),
            seed=int(d.get("seed", 0)),
            resample=bool(d.get("resample", False)),
        )


class Oracle:
    """Base oracle. Subclasses implement :meth:`predict`."""

    def __init__(self, trace: Trace):
        self.trace = trace
        self.log = QueryLog()

    def predict(self, page: int, t: int, actual: int) -> float:
        raise NotImplementedError

    def query(self, page: int, t: int) -> float:
        actual = self.trace.next_request_after(page, t)
        tau = self.predict(page, t, actual)
        self.log.append(QueryRecord(page, t, tau, actual))
        return tau


class PerfectOracle(Oracle):
    def predict(self, page, t, actual):
        return actual


class LognormalOracle(Oracle):
    """Actual next arrival plus LogNormal(0, sigma) noise.

    Noise is pre-drawn once per request position, keyed by the page's most
    recent request at or before the query time, so the same
    (page, next arrival) pair always gets the same prediction no matter
    which policy asks or in what order.
    """

    def __init__(self, trace: Trace, sigma: float, seed: int, resample: bool = False):
        super().__init__(trace)
        self.sigma = sigma
        self.resample = resample
        self._rng = np.random.default_rng(seed)
        self._noise = self._rng.lognormal(0.0, sigma, size=len(trace)).tolist()
        self._orphan: dict[int, float] = {}

    def predict(self, page, t, actual):
        if self.resample:
            return actual + float(self._rng.lognormal(0.0, self.sigma))
        s = self.trace.last_request_at_or_before(page, t)
        if s is None:
            if page not in self._orphan:
                self._orphan[page] = float(self._rng.lognormal(0.0, self.sigma))
            return actual + self._orphan[page]
        return actual + self._noise[s - 1]


class MeanIntervalOracle(Oracle):
    """Last request time plus the page's running mean inter-request gap.

    Pages seen fewer than twice use the trace length as their gap; pages
    never seen get the never-again sentinel.
    """

    def __init__(self, trace: Trace):
        super().__init__(trace)
        self._upto = 0
        self._first: dict[int, int] = {}
        self._last: dict[int, int] = {}
        self._count: dict[int, int] = {}

    def _advance(self, t: int) -> None:
        reqs = self.trace.requests
        while self._upto < t:
            self._upto += 1
            p = reqs[self._upto - 1]
            self._first.setdefault(p, self._upto)
            self._last[p] = self._upto
            self._count[p] = self._count.get(p, 0) + 1

    def mean_gap(self, page: int) -> float:
        c = self._count.get(page, 0)
        if c < 2:
            return len(self.trace)
        return (self._last[page] - self._first[page]) / (c - 1)

    def predict(self, page, t, actual):
        self._advance(t)
        if page not in self._last:
            return self.trace.sentinel
        mu = self.mean_gap(page)
        tau = self._last[page] + mu
        return int(tau) if float(tau).is_integer() else tau


def query_set(log: Iterable[QueryRecord]) -> list[QueryRecord]:
    """One record per distinct (page, actual next arrival) event, first occurrence kept."""
    seen: set[tuple[int, int]] = set()
    out = []
    for r in log:
        key = (r.page, r.actual)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def total_error(log: Iterable[QueryRecord]) -> float:
    """Sum of |predicted - actual| over all records."""
    vals = [abs(r.predicted - r.actual) for r in log]
    if all(isinstance(v, int) for v in vals):
        return sum(vals)
    return math.fsum(vals)


def count_inversions_naive(log: Iterable[QueryRecord]) -> int:
    recs = list(log)
    n = 0
    for i in range(len(recs)):
        for j in range(i + 1, len(recs)):
            x, y = recs[i], recs[j]
            if (x.predicted >= y.predicted and x.actual < y.actual) or (
                y.predicted >= x.predicted and y.actual < x.actual
            ):
                n += 1
    return n


def count_inversions(log: Iterable[QueryRecord]) -> int:
    """Pairs whose predicted order contradicts the actual order, in O(n log n).

    Counts ordered pairs (x, y) with ``actual_x < actual_y`` and
    ``predicted_x >= predicted_y``; both orientations can never hold at once.
    """
    recs = sorted(((r.actual, r.predicted) for r in log))
    if len(recs) < 2:
        return 0
    preds = sorted({p for _, p in recs})
    rank = {p: i + 1 for i, p in enumerate(preds)}
    m = len(preds)
    tree = [0] * (m + 1)
    inserted = 0
    total = 0
    i = 0
    while i < len(recs):
        j = i
        while j < len(recs) and recs[j][0] == recs[i][0]:
            j += 1
        # records with strictly smaller actual are in the tree
        for _, p in recs[i:j]:
            r = rank[p] - 1
            below = 0
            while r > 0:
                below += tree[r]
                r -= r & -r
            total += inserted - below
        for _, p in recs[i:j]:
            r = rank[p]
            while r <= m:
                tree[r] += 1
                r += r & -r
            inserted += 1
        i = j
    return total
