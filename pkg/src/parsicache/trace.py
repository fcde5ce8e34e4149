"""Request traces, next-arrival indexing and the marking-phase decomposition.

Time is 1-indexed throughout: ``trace.page(1)`` is the first request and a
page that is never requested again has next arrival ``len(trace) + 1``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class Trace:
    requests: tuple[int, ...]
    # _next[i] is the next arrival (1-indexed) of the request at time i + 1
    _next: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.requests)

    @property
    def sentinel(self) -> int:
        return len(self.requests) + 1

    def page(self, t: int) -> int:
        return self.requests[t - 1]

    def next_arrival(self, t: int) -> int:
        if not 1 <= t <= len(self.requests):
            raise IndexError(f"time {t} outside 1..{len(self.requests)}")
        return self._next[t - 1]

    @property
    def next_arrivals(self) -> tuple[int, ...]:
        """Next arrival of every request, in request order."""
        return self._next

    @cached_property
    def universe_size(self) -> int:
        return len(set(self.requests))

    @cached_property
    def occurrences(self) -> dict[int, list[int]]:
        occ: dict[int, list[int]] = {}
        for t, p in enumerate(self.requests, start=1):
            occ.setdefault(p, []).append(t)
        return occ

    def next_request_after(self, page: int, t: int) -> int:
        """Time of the first request to `page` strictly after `t` (sentinel if none)."""
        pos = self.occurrences.get(page)
        if not pos:
            return self.sentinel
        i = bisect.bisect_right(pos, t)
        return pos[i] if i < len(pos) else self.sentinel

    def last_request_at_or_before(self, page: int, t: int) -> int | None:
        pos = self.occurrences.get(page)
        if not pos:
            return None
        i = bisect.bisect_right(pos, t)
        return pos[i - 1] if i > 0 else None


def build_trace(requests: Sequence[int]) -> Trace:
    """Materialize a trace and its next-arrival index with one reverse scan."""
    reqs = tuple(int(p) for p in requests)
    if not reqs:
        raise TraceError("empty trace")
    n = len(reqs)
    nxt = [0] * n
    last_seen: dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        p = reqs[i]
        nxt[i] = last_seen.get(p, n + 1)
        last_seen[p] = i + 1
    return Trace(reqs, tuple(nxt))


@dataclass(frozen=True)
class PhaseStructure:
    """Algorithm-independent split of a trace into marking phases.

    Phase indices are 0-based; ``boundaries[h]`` holds 1-indexed inclusive
    ``(start, end)`` times.
    """

    k: int
    boundaries: tuple[tuple[int, int], ...]
    distinct: tuple[frozenset[int], ...]
    clean_pages: tuple[frozenset[int], ...]
    stale_order: tuple[tuple[int, ...], ...]

    @property
    def ell(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clean_pages)

    def __len__(self) -> int:
        return len(self.boundaries)

    def phase_of(self, t: int) -> int:
        starts = [b[0] for b in self.boundaries]
        return bisect.bisect_right(starts, t) - 1

    @cached_property
    def phase_index(self) -> tuple[int, ...]:
        """Phase of every time step, in request order."""
        out: list[int] = []
        for h, (s, e) in enumerate(self.boundaries):
            out.extend([h] * (e - s + 1))
        return tuple(out)

    def stale_pages(self, h: int) -> frozenset[int]:
        return self.distinct[h - 1] if h > 0 else frozenset()


def decompose_phases(trace: Trace, k: int) -> PhaseStructure:
    if k < 1:
        raise ValueError("k must be >= 1")
    bounds: list[tuple[int, int]] = []
    distinct: list[frozenset[int]] = []
    firsts: list[list[int]] = []  # pages in first-request order per phase
    start = 1
    seen: set[int] = set()
    order: list[int] = []
    for t, p in enumerate(trace.requests, start=1):
        if p in seen:
            continue
        if len(seen) == k:
            bounds.append((start, t - 1))
            distinct.append(frozenset(seen))
            firsts.append(order)
            start, seen, order = t, set(), []
        seen.add(p)
        order.append(p)
    bounds.append((start, len(trace)))
    distinct.append(frozenset(seen))
    firsts.append(order)

    clean: list[frozenset[int]] = []
    stale_order: list[tuple[int, ...]] = []
    prev: frozenset[int] = frozenset()
    for h, pages in enumerate(distinct):
        clean.append(pages - prev)
        requested = [p for p in firsts[h] if p in prev]
        unrequested = sorted(prev - pages)
        stale_order.append(tuple(requested + unrequested))
        prev = pages
    return PhaseStructure(k, tuple(bounds), tuple(distinct), tuple(clean), tuple(stale_order))


def stale_rank_order(phases: PhaseStructure, h: int) -> tuple[int, ...]:
    """Stale pages of phase `h` by first request, never-requested ones last by id."""
    if not 0 <= h < len(phases):
        raise IndexError(f"phase {h} outside 0..{len(phases) - 1}")
    return phases.stale_order[h]
