"""Eviction policies on a shared trace-driven simulation loop.

Marking policies (RandomMarker, NaiveEviction, AdaptiveQuery, LVMarker,
RohatgiMarker) follow the generic marking scheme: a hit marks the page, a
miss with every resident page marked starts a new phase, and only unmarked
pages are evicted. FiF, LRU, BlindOracle and RobustOracle evict from the
whole cache.

Every argmax/argmin over pages breaks ties toward the smallest page id.
"""
from __future__ import annotations

import json
import math
from collections import Counter, OrderedDict
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .oracles import Oracle, OracleSpec, QueryLog, count_inversions, total_error
from .trace import PhaseStructure, Trace, decompose_phases

POLICY_NAMES = (
    "FiF",
    "RandomMarker",
    "LRU",
    "BlindOracle",
    "LVMarker",
    "RohatgiMarker",
    "RobustOracle",
    "NaiveEviction",
    "AdaptiveQuery",
)
MARKING = {"RandomMarker", "LVMarker", "RohatgiMarker", "NaiveEviction", "AdaptiveQuery"}
FULL_INFORMATION = {"BlindOracle", "LVMarker", "RohatgiMarker", "RobustOracle"}
RANDOMIZED = {"RandomMarker", "LVMarker", "RohatgiMarker", "RobustOracle", "NaiveEviction", "AdaptiveQuery"}
RNG_ALGORITHM = "numpy.PCG64"
BRUTE_FORCE_MAX_LEN = 14
BRUTE_FORCE_MAX_K = 4


class ConfigError(ValueError):
    pass


def harmonic(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


@dataclass(frozen=True)
class PolicyConfig:
    policy: str
    b: int | None = None
    epsilon: float | None = None
    # None means the per-k default; math.inf disables the switch
    fallback_threshold: float | None = None
    lv_threshold: float | None = None
    combiner_gamma: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.policy not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.policy == "AdaptiveQuery" and (self.b is None or self.b < 1):
            raise ConfigError("AdaptiveQuery needs b >= 1")
        if self.policy == "NaiveEviction" and (self.epsilon is None or not 0 < self.epsilon <= 1):
            raise ConfigError("NaiveEviction needs 0 < epsilon <= 1")
        for name in ("fallback_threshold", "lv_threshold"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.combiner_gamma > 1:
            raise ConfigError("combiner_gamma must be > 1")

    @property
    def label(self) -> str:
        if self.policy == "AdaptiveQuery":
            return f"AdaptiveQuery-{self.b}"
        if self.policy == "NaiveEviction":
            return f"NaiveEviction(eps={self.epsilon:g})"
        return self.policy

    @property
    def randomized(self) -> bool:
        return self.policy in RANDOMIZED

    @property
    def uses_oracle(self) -> bool:
        return self.policy not in {"FiF", "RandomMarker", "LRU"}

    def fallback_for(self, k: int) -> float:
        if self.fallback_threshold is not None:
            return self.fallback_threshold
        return max(1, math.ceil(math.log(k))) if k > 1 else 1

    def lv_threshold_for(self, k: int) -> float:
        if self.policy == "RohatgiMarker":
            return 1
        if self.lv_threshold is not None:
            return self.lv_threshold
        return harmonic(k)

    def with_seed(self, seed: int) -> "PolicyConfig":
        return PolicyConfig(**{**asdict(self), "seed": seed})

    def to_dict(self) -> dict:
        d = {"policy": self.policy, "seed": self.seed}
        for name in ("b", "epsilon", "fallback_threshold", "lv_threshold"):
            v = getattr(self, name)
            if v is not None:
                d[name] = "inf" if v == math.inf else v
        if self.policy == "RobustOracle":
            d["combiner_gamma"] = "inf" if self.combiner_gamma == math.inf else self.combiner_gamma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        def num(v):
            return math.inf if v in ("inf", "Infinity") else v

        return cls(
            policy=d["policy"],
            b=d.get("b"),
            epsilon=d.get("epsilon"),
            fallback_threshold=num(d.get("fallback_threshold")),
            lv_threshold=num(d.get("lv_threshold")),
            combiner_gamma=float(num(d.get("combiner_gamma", 2.0))),
            seed=int(d.get("seed", 0)),
        )


# ---------------------------------------------------------------- helpers


class IndexedSet:
    """Set with O(1) add/remove and O(1) uniform access by index."""

    __slots__ = ("items", "_pos")

    def __init__(self, items: Iterable[int] = ()):
        self.items: list[int] = []
        self._pos: dict[int, int] = {}
        for x in items:
            self.add(x)

    def add(self, x: int) -> None:
        if x not in self._pos:
            self._pos[x] = len(self.items)
            self.items.append(x)

    def discard(self, x: int) -> None:
        i = self._pos.pop(x, None)
        if i is None:
            return
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self._pos[last] = i

    def __contains__(self, x) -> bool:
        return x in self._pos

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def uniform_pick(rng: np.random.Generator, items: Sequence[int]) -> int:
    return items[int(rng.integers(len(items)))]


def sample_without_replacement(rng: np.random.Generator, items: Sequence[int], b: int) -> list[int]:
    """Partial Fisher-Yates; the first draw matches :func:`uniform_pick`."""
    n = len(items)
    b = min(b, n)
    swapped: dict[int, int] = {}
    out = []
    for i in range(b):
        j = int(rng.integers(i, n))
        out.append(items[swapped.get(j, j)])
        swapped[j] = swapped.get(i, i)
    return out


def argmax_page(pages: Iterable[int], score) -> int:
    return max(pages, key=lambda p: (score(p), -p))


# --------------------------------------------------- single-eviction rules


def fif_evict(resident: Iterable[int], trace: Trace, t: int) -> int:
    """Resident page whose next request after `t` is furthest away."""
    return argmax_page(resident, lambda p: trace.next_request_after(p, t))


def random_marker_evict(unmarked: Sequence[int], rng: np.random.Generator) -> int:
    return uniform_pick(rng, unmarked)


def lru_evict(resident: Iterable[int], recency: dict[int, int]) -> int:
    return min(resident, key=lambda p: (recency[p], p))


def blind_oracle_evict(resident: Iterable[int], predictions: dict[int, float]) -> int:
    return argmax_page(resident, predictions.__getitem__)


def naive_evict(unmarked, oracle: Oracle, t, epsilon, k, memo: dict[int, float], rng) -> int:
    """Random while at least ceil(eps*k) pages are unmarked, else Belady on queried predictions.

    `memo` holds predictions queried earlier in the current phase and is
    filled in place.
    """
    if len(unmarked) >= math.ceil(epsilon * k):
        return uniform_pick(rng, unmarked)
    for p in sorted(unmarked):
        if p not in memo:
            memo[p] = oracle.query(p, t)
    return argmax_page(unmarked, memo.__getitem__)


def adaptive_query_evict(unmarked, oracle: Oracle, t, b, rng) -> int:
    sample = sample_without_replacement(rng, unmarked, b)
    tau = {p: oracle.query(p, t) for p in sample}
    return argmax_page(sample, tau.__getitem__)


def adaptive_with_fallback(unmarked, oracle: Oracle, t, b, chain_depth, threshold, rng) -> int:
    if chain_depth <= threshold:
        return adaptive_query_evict(unmarked, oracle, t, b, rng)
    return uniform_pick(rng, unmarked)


def lv_marker_evict(unmarked, predictions: dict[int, float], chain_depth, lv_threshold, rng) -> int:
    if chain_depth <= lv_threshold:
        return argmax_page(unmarked, predictions.__getitem__)
    return uniform_pick(rng, unmarked)


def rohatgi_marker_evict(unmarked, predictions, chain_depth, rng) -> int:
    return lv_marker_evict(unmarked, predictions, chain_depth, 1, rng)


def rank_of(evicted: int, stale_order: Sequence[int], already_evicted: set[int]) -> int:
    """Not-yet-evicted stale pages strictly after `evicted` in the phase order."""
    i = stale_order.index(evicted)
    return sum(1 for q in stale_order[i + 1 :] if q not in already_evicted)


def brute_force_opt(trace: Trace, k: int) -> int:
    """Exhaustive offline minimum, memoized on (position, cache contents)."""
    if len(trace) > BRUTE_FORCE_MAX_LEN or k > BRUTE_FORCE_MAX_K:
        raise ValueError("exceeds brute-force budget")
    reqs = trace.requests
    n = len(reqs)

    @lru_cache(maxsize=None)
    def best(i: int, cache: frozenset) -> int:
        if i == n:
            return 0
        p = reqs[i]
        if p in cache:
            return best(i + 1, cache)
        if len(cache) < k:
            return 1 + best(i + 1, cache | {p})
        return 1 + min(best(i + 1, (cache - {q}) | {p}) for q in cache)

    return best(0, frozenset())


# ------------------------------------------------------------ chain tracking


class ChainTracker:
    """Eviction chains of the current phase."""

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.chain_of: dict[int, tuple[int, int]] = {}
        self.lengths: list[int] = []
        self.synthetic: list[bool] = []

    @property
    def next_chain_id(self) -> int:
        return len(self.lengths)

    def depth_of(self, page: int) -> int | None:
        hit = self.chain_of.get(page)
        return None if hit is None else hit[1]

    def extend_chain(self, requested: int, evicted: int, is_clean: bool) -> tuple[int, int]:
        if is_clean or requested not in self.chain_of:
            i = len(self.lengths)
            self.lengths.append(1)
            self.synthetic.append(not is_clean)
            self.chain_of[evicted] = (i, 1)
            return i, 1
        i, j = self.chain_of[requested]
        self.chain_of[evicted] = (i, j + 1)
        self.lengths[i] = max(self.lengths[i], j + 1)
        return i, j + 1

    def real_lengths(self) -> list[int]:
        return [m for m, s in zip(self.lengths, self.synthetic) if not s]


# --------------------------------------------------------------- reporting


@dataclass
class PhaseStats:
    ell: int
    misses: int
    queries: int
    chain_hist: dict[int, int]
    query_span: tuple[int, int]  # [start, end) into the run's query log


@dataclass
class SimReport:
    policy: str
    k: int
    length: int
    misses: int
    evictions: int
    queries: int
    eta: float
    inversions: int
    opt_cost: int
    per_phase: list[PhaseStats]
    chain_lengths: list[int]
    full_information: bool
    rng: str = RNG_ALGORITHM
    # (depth of requested page, rank of requested, rank of evicted) per eviction
    rank_steps: list[tuple[int, int, int]] = field(default_factory=list)
    # RobustOracle only: final leader and number of leadership switches
    leader: str | None = None
    switches: int = 0
    # marking policies: smallest unmarked count seen at an eviction, and
    # AdaptiveQuery evictions decided by the random fallback
    min_unmarked: int | None = None
    fallback_evictions: int = 0
    log: QueryLog = field(default_factory=QueryLog, repr=False)

    @property
    def ratio(self) -> float:
        return self.misses / self.opt_cost

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("log")
        d["ratio"] = self.ratio
        for ph in d["per_phase"]:
            ph["chain_hist"] = {str(m): c for m, c in sorted(ph["chain_hist"].items())}
            ph["query_span"] = list(ph["query_span"])
        d["rank_steps"] = [list(s) for s in d["rank_steps"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ------------------------------------------------------------- simulation


class _Shadow:
    """Minimal whole-cache simulator used inside the combiner."""

    def __init__(self, k: int):
        self.k = k
        self.resident: set[int] = set()
        self.misses = 0
        self.last_evicted: int | None = None

    def serve(self, p: int, t: int) -> None:
        if p in self.resident:
            self.hit(p)
            return
        self.misses += 1
        if len(self.resident) >= self.k:
            v = self.choose(p, t)
            self.resident.discard(v)
            self.last_evicted = v
        self.resident.add(p)
        self.fetched(p)

    def hit(self, p):
        pass

    def fetched(self, p):
        pass


class _BlindShadow(_Shadow):
    def __init__(self, k, predictions):
        super().__init__(k)
        self.predictions = predictions

    def choose(self, p, t):
        return blind_oracle_evict(self.resident, self.predictions)


class _MarkerShadow(_Shadow):
    def __init__(self, k, rng):
        super().__init__(k)
        self.rng = rng
        self.unmarked = IndexedSet()

    def hit(self, p):
        self.unmarked.discard(p)

    def choose(self, p, t):
        if not len(self.unmarked):
            self.unmarked = IndexedSet(sorted(self.resident))
        v = uniform_pick(self.rng, self.unmarked.items)
        self.unmarked.discard(v)
        return v


def fif_misses(trace: Trace, k: int) -> int:
    return simulate(PolicyConfig("FiF"), trace, k, opt_cost=1).misses


def simulate(
    config: PolicyConfig,
    trace: Trace,
    k: int,
    oracle: OracleSpec | Oracle | None = None,
    *,
    opt_cost: int | None = None,
    phases: PhaseStructure | None = None,
    diagnostics: bool = False,
) -> SimReport:
    """Run one policy over a trace.

    `oracle` may be an OracleSpec (a fresh oracle is built) or a ready instance;
    `opt_cost` defaults to a FiF run on the same trace. With `diagnostics`
    marking policies also record eviction ranks.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    config.validate()
    if opt_cost is None:
        opt_cost = fif_misses(trace, k)
    if phases is None:
        phases = decompose_phases(trace, k)
    if oracle is None:
        oracle = OracleSpec()
    if isinstance(oracle, OracleSpec):
        oracle = oracle.build(trace)
    log = oracle.log
    log_start = len(log)

    name = config.policy
    marking = name in MARKING
    full_info = name in FULL_INFORMATION
    rng = np.random.default_rng(config.seed)
    fallback = config.fallback_for(k)
    lv_thr = config.lv_threshold_for(k)

    reqs = trace.requests
    nxt_of_t = trace.next_arrivals
    phase_idx = phases.phase_index

    resident: set[int] = set()
    unmarked = IndexedSet()
    next_arr: dict[int, int] = {}  # FiF
    recency: OrderedDict[int, None] = OrderedDict()  # LRU
    predictions: dict[int, float] = {}  # full-information policies
    memo: dict[int, float] = {}  # NaiveEviction per-phase
    if name == "RobustOracle":
        child = np.random.SeedSequence(config.seed).spawn(1)[0]
        shadows = [_BlindShadow(k, predictions), _MarkerShadow(k, np.random.default_rng(child))]
        leader = 0
        switches = 0
        gamma = config.combiner_gamma

    tracker = ChainTracker()
    per_phase: list[PhaseStats] = []
    chain_lengths: list[int] = []
    rank_steps: list[tuple[int, int, int]] = []
    misses = evictions = fallback_evictions = 0
    min_unmarked: int | None = None
    cur = -1
    clean: frozenset[int] = frozenset()
    ph_misses = 0
    ph_start_q = len(log)
    stale_order: tuple[int, ...] = ()
    evicted_this_phase: set[int] = set()
    rank_at: dict[int, int] = {}

    def close_phase():
        lens = tracker.real_lengths() if marking else []
        chain_lengths.extend(lens)
        per_phase.append(
            PhaseStats(
                ell=len(clean),
                misses=ph_misses,
                queries=len(log) - ph_start_q,
                chain_hist=dict(sorted(Counter(lens).items())),
                query_span=(ph_start_q - log_start, len(log) - log_start),
            )
        )

    for t, p in enumerate(reqs, start=1):
        h = phase_idx[t - 1]
        if h != cur:
            if cur >= 0:
                close_phase()
            cur = h
            clean = phases.clean_pages[h]
            ph_misses = 0
            ph_start_q = len(log)
            tracker.reset()
            if diagnostics:
                stale_order = phases.stale_order[h]
                evicted_this_phase = set()
                rank_at = {}

        if name == "RobustOracle":
            for s in shadows:
                s.serve(p, t)
            other = 1 - leader
            if shadows[leader].misses > gamma * shadows[other].misses:
                leader = other
                switches += 1

        if p in resident:
            if marking:
                unmarked.discard(p)
        else:
            misses += 1
            ph_misses += 1
            if len(resident) >= k:
                if marking and not len(unmarked):
                    # all resident pages marked: a new phase must have begun
                    assert phase_idx[t - 1] != phase_idx[t - 2] or t == 1
                    unmarked = IndexedSet(sorted(resident))
                    memo.clear()
                is_clean = p in clean
                depth = 0 if is_clean else tracker.depth_of(p)
                j = 0 if depth is None else depth
                if diagnostics and marking:
                    r_req = len(unmarked) if is_clean else rank_at.get(p, -1)

                if name == "FiF":
                    victim = argmax_page(resident, next_arr.__getitem__)
                elif name == "LRU":
                    victim = next(iter(recency))
                elif name == "BlindOracle":
                    victim = blind_oracle_evict(resident, predictions)
                elif name == "RobustOracle":
                    lead = shadows[leader]
                    extra = resident - lead.resident
                    if extra:
                        victim = min(extra)
                    elif lead.last_evicted in resident:
                        victim = lead.last_evicted
                    else:
                        victim = min(resident)
                elif name == "RandomMarker":
                    victim = random_marker_evict(unmarked.items, rng)
                elif name == "NaiveEviction":
                    victim = naive_evict(unmarked.items, oracle, t, config.epsilon, k, memo, rng)
                elif name == "AdaptiveQuery":
                    victim = adaptive_with_fallback(unmarked.items, oracle, t, config.b, j, fallback, rng)
                    fallback_evictions += j > fallback
                else:  # LVMarker, RohatgiMarker
                    victim = lv_marker_evict(unmarked.items, predictions, j, lv_thr, rng)

                if marking:
                    if min_unmarked is None or len(unmarked) < min_unmarked:
                        min_unmarked = len(unmarked)
                    tracker.extend_chain(p, victim, is_clean)
                    if diagnostics:
                        r_new = rank_of(victim, stale_order, evicted_this_phase)
                        evicted_this_phase.add(victim)
                        rank_at[victim] = r_new
                        rank_steps.append((j, r_req, r_new))
                resident.discard(victim)
                unmarked.discard(victim)
                next_arr.pop(victim, None)
                recency.pop(victim, None)
                evictions += 1
            resident.add(p)

        if name == "FiF":
            next_arr[p] = nxt_of_t[t - 1]
        elif name == "LRU":
            recency[p] = None
            recency.move_to_end(p)
        elif full_info:
            predictions[p] = oracle.query(p, t)

    close_phase()

    run_log = QueryLog(log[log_start:])
    return SimReport(
        policy=config.label,
        k=k,
        length=len(trace),
        misses=misses,
        evictions=evictions,
        queries=len(run_log),
        eta=total_error(run_log),
        inversions=count_inversions(run_log),
        opt_cost=opt_cost,
        per_phase=per_phase,
        chain_lengths=chain_lengths,
        full_information=full_info,
        rank_steps=rank_steps,
        leader=("BlindOracle", "RandomMarker")[leader] if name == "RobustOracle" else None,
        switches=switches if name == "RobustOracle" else 0,
        min_unmarked=min_unmarked,
        fallback_evictions=fallback_evictions,
        log=run_log,
    )
