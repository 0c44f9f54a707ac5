"""Resolve scheduling: the 4-to-1 dependency rule, a lockstep simulator and cost estimators.

Resolve(i, k) is the k-th resolve of level i (k counts from 1).  Its
dependencies:

* Resolve(i-1, 4k) has finished (level i is fed by every 4th resolve above it);
* when k % 4 == 1 and k > 1, Resolve(i+1, (k-1)/4) has finished;
* no resolve on level i-1, i or i+1 is in flight (a resolve writes two levels).

Level 0 is resolved once per operation, so its rule only has the deeper part.
"""

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import DataError, InvariantError

CSV_SCHEMA = "parbucket.schedule/1"


class DependencyState:
    """Completed-resolve counters ``c_i`` and in-flight flags for every level.

    ``counters`` may be an external int64 array (the engine passes the heap's
    schedule row) so that resolves run inside kernels are seen here too.
    """

    def __init__(self, levels: int = 64, counters: np.ndarray | None = None):
        self.counters = np.zeros(levels, np.int64) if counters is None else counters
        self.in_flight: set[int] = set()

    def count(self, i: int) -> int:
        return int(self.counters[i]) if 0 <= i < self.counters.size else 0

    def due(self, i: int, deepest: int | None = None) -> bool:
        """Counter part of the rule only; ``deepest`` bounds the levels that exist."""
        if deepest is not None and i > deepest:
            return False
        k = self.count(i) + 1
        if i >= 1 and self.count(i - 1) < 4 * k:
            return False
        if k % 4 == 1 and k > 1 and (deepest is None or i + 1 <= deepest):
            if self.count(i + 1) < (k - 1) // 4:
                return False
        return True

    def can_resolve(self, i: int, deepest: int | None = None) -> bool:
        if i in self.in_flight or i - 1 in self.in_flight or i + 1 in self.in_flight:
            return False
        return self.due(i, deepest)

    def record_start(self, i: int, deepest: int | None = None) -> None:
        if i in self.in_flight:
            raise InvariantError(f"resolve of level {i} started twice")
        if not self.can_resolve(i, deepest):
            raise InvariantError(f"resolve of level {i} started without permission")
        self.in_flight.add(i)

    def record_end(self, i: int) -> None:
        if i not in self.in_flight:
            raise InvariantError(f"resolve of level {i} ended but was not in flight")
        self.in_flight.remove(i)
        self.counters[i] += 1

    def check(self) -> list[str]:
        """Violated state invariants (feeder lead, adjacent in-flight pairs)."""
        out = []
        for i in range(1, self.counters.size):
            if self.count(i) > -(-self.count(i - 1) // 4):
                out.append(f"level {i} ran ahead of its feeder: c={self.count(i)}, feeder c={self.count(i - 1)}")
        for i in self.in_flight:
            if i + 1 in self.in_flight:
                out.append(f"levels {i} and {i + 1} both in flight")
        return out


@dataclass(frozen=True)
class ScheduleEvent:
    level: int
    k: int
    start: int
    end: int
    touches: int = 0


@dataclass
class ScheduleTrace:
    events: list[ScheduleEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def index(self) -> dict[tuple[int, int], ScheduleEvent]:
        return {(e.level, e.k): e for e in self.events}

    def levels(self) -> int:
        return 1 + max((e.level for e in self.events), default=-1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={CSV_SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "k", "start", "end"])
        for e in self.events:
            w.writerow([e.level, e.k, e.start, e.end])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScheduleTrace":
        events = []
        rows = [(n, line) for n, line in enumerate(text.splitlines(), 1) if line and not line.startswith("#")]
        if not rows or rows[0][1].strip() != "level,k,start,end":
            raise DataError("missing header level,k,start,end", rows[0][0] if rows else 1)
        for n, line in rows[1:]:
            parts = line.split(",")
            try:
                level, k, start, end = (int(x) for x in parts)
            except ValueError:
                raise DataError(f"malformed schedule row {line!r}", n) from None
            events.append(ScheduleEvent(level, k, start, end))
        return cls(events)

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())


def closed_form_start(i: int, k: int) -> int:
    """Start timestep of Resolve(i, k) in the lockstep schedule with durations 4^i."""
    p = 4 ** i
    return 5 * k * p - 5 + (p - 1) // 3


def lockstep_simulate(n_ops: int, resolve_duration: Callable[[int], int] = lambda i: 4 ** i) -> ScheduleTrace:
    """Greedy earliest-start schedule for ``n_ops`` operations.

    Resolve(0, k) is released at timestep 5k-5; every other resolve starts at
    the first timestep where its dependencies allow.  Ties go to the lower
    level.  Level i exists once Resolve(i-1, 4) has been issued.
    """
    if n_ops < 0:
        raise ValueError("n_ops must be >= 0")
    totals = [n_ops]
    while totals[-1] >= 4:
        totals.append(totals[-1] // 4)
    if totals[-1] == 0:
        totals.pop()
    nlev = len(totals)
    dur = [int(resolve_duration(i)) for i in range(nlev)]
    if any(x < 1 for x in dur):
        raise ValueError("resolve durations must be >= 1")
    end: list[list[int]] = [[] for _ in range(nlev)]  # end[i][k-1]
    busy_until = [0] * nlev
    events = []
    t = 0
    remaining = sum(totals)
    while remaining:
        for i in range(nlev):
            k = len(end[i]) + 1
            if k > totals[i] or busy_until[i] > t:
                continue
            if i == 0 and t < 5 * k - 5:
                continue
            if i >= 1 and (len(end[i - 1]) < 4 * k or end[i - 1][4 * k - 1] > t):
                continue
            if k % 4 == 1 and k > 1 and i + 1 < nlev:
                m = (k - 1) // 4
                if len(end[i + 1]) < m or end[i + 1][m - 1] > t:
                    continue
            if (i > 0 and busy_until[i - 1] > t) or (i + 1 < nlev and busy_until[i + 1] > t):
                continue
            e = t + dur[i]
            end[i].append(e)
            busy_until[i] = e
            events.append(ScheduleEvent(i, k, t, e))
            remaining -= 1
        # nothing changes before the next end or level-0 release
        nxt = [b for b in busy_until if b > t]
        if len(end[0]) < totals[0]:
            nxt.append(max(5 * len(end[0]), t + 1))
        t = min(nxt) if nxt else t + 1
    events.sort(key=lambda e: (e.start, e.level))
    return ScheduleTrace(events)


def verify_schedule(trace: ScheduleTrace) -> bool:
    return not schedule_violations(trace)


def schedule_violations(trace: ScheduleTrace, limit: int = 20) -> list[str]:
    """Dependency and exclusion violations of ``trace``; empty when valid."""
    out: list[str] = []
    idx = trace.index()
    by_level: dict[int, list[ScheduleEvent]] = {}
    for e in trace.events:
        by_level.setdefault(e.level, []).append(e)
        if e.end <= e.start:
            out.append(f"Res({e.level},{e.k}) has end {e.end} <= start {e.start}")
        if e.level >= 1:
            feeder = idx.get((e.level - 1, 4 * e.k))
            if feeder is None:
                out.append(f"Res({e.level},{e.k}) has no feeder Res({e.level - 1},{4 * e.k})")
            elif e.start < feeder.end:
                out.append(f"Res({e.level},{e.k}) starts at {e.start} before feeder ends at {feeder.end}")
        if e.k % 4 == 1 and e.k > 1:
            deeper = idx.get((e.level + 1, (e.k - 1) // 4))
            if deeper is not None and e.start < deeper.end:
                out.append(f"Res({e.level},{e.k}) starts at {e.start} before Res({e.level + 1},{(e.k - 1) // 4}) ends at {deeper.end}")
        if len(out) >= limit:
            return out
    for lv, evs in by_level.items():
        evs.sort(key=lambda e: e.k)
        if [e.k for e in evs] != list(range(1, len(evs) + 1)):
            out.append(f"level {lv} ordinals are not 1..{len(evs)}")
        for a, b in zip(evs, evs[1:]):
            if b.start < a.end:
                out.append(f"Res({lv},{b.k}) overlaps Res({lv},{a.k})")
    out.extend(adjacent_overlaps([(e.level, e.level, e.start, e.end) for e in trace.events], limit))
    return out[:limit]


def adjacent_overlaps(intervals: Iterable[tuple[int, int, int, int]], limit: int = 20) -> list[str]:
    """Pairs of time-overlapping intervals whose level ranges are adjacent or shared.

    Each interval is ``(lo, hi, start, end)``: the resolves of levels lo..hi
    ran somewhere inside the half-open window [start, end).
    """
    ivs = sorted(intervals, key=lambda x: x[2])
    out: list[str] = []
    active: list[tuple[int, int, int, int]] = []
    for cur in ivs:
        active = [a for a in active if a[3] > cur[2]]
        for a in active:
            if a[0] <= cur[1] + 1 and cur[0] <= a[1] + 1:
                out.append(f"levels {a[0]}..{a[1]} [{a[2]},{a[3]}) overlap levels {cur[0]}..{cur[1]} [{cur[2]},{cur[3]})")
                if len(out) >= limit:
                    return out
        active.append(cur)
    return out


def attach_touches(trace: ScheduleTrace, events: np.ndarray) -> ScheduleTrace:
    """Copy per-resolve touch counts, rows ``(level, k, touches)``, onto matching events.

    Resolves the simulator schedules on levels the heap never allocated did no
    work and keep zero touches.
    """
    touches = {(int(l), int(k)): int(t) for l, k, t in events}
    return ScheduleTrace([
        ScheduleEvent(e.level, e.k, e.start, e.end, touches.get((e.level, e.k), 0)) for e in trace.events
    ])


def io_cost(trace: ScheduleTrace, block_size: int, processors: int) -> float:
    """Estimated parallel block transfers of a resolve trace.

    Each event costs ceil(touches / B) transfers and is charged to processor
    ``level mod P``.  Per-processor costs are summed over the timesteps of
    the trace and the busiest processor's total is reported, since the
    processors run in parallel.
    """
    if block_size < 1 or processors < 1:
        raise ValueError("block size and processor count must be >= 1")
    load = np.zeros(processors, np.int64)
    for e in trace.events:
        load[e.level % processors] += -(-e.touches // block_size)
    return float(load.max())
