"""Concurrent execution of operation streams on the bucket heap.

The calling thread is the front worker.  It applies operations and runs every
resolve on levels below ``front_levels`` inline, inside one compiled loop.
With ``workers > 1`` a pool of ``workers - 1`` threads runs the deeper
resolves as the 4-to-1 rule makes them due.  A resolve of level i writes
levels i and i+1, so the coordinator never lets two resolves on adjacent
levels run at once; while the pool holds level ``front_levels`` the front
drops its own limit by one.

Results do not depend on the worker count: every resolve sees the same
state it would see in a sequential run, only the timing differs.
"""

import json
import threading
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .core import BucketHeap, Element, raise_for_status
from .errors import EmptyHeapError, InvariantError, ParBucketError, PreconditionError
from .oracle import retired_violation
from .scheduler import DependencyState, adjacent_overlaps
from .traces import Trace

METRICS_SCHEMA = "parbucket.metrics/1"


@dataclass
class EngineConfig:
    d: int
    workers: int = 1
    debug_assertions: bool = False
    front_levels: int = 3
    instrument: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError(f"d must be >= 1, got {self.d}")
        if self.workers < 1:
            raise PreconditionError(f"workers must be >= 1, got {self.workers}")
        if self.front_levels < 2:
            raise PreconditionError("front_levels must be >= 2")


@dataclass
class Metrics:
    ops: int = 0
    resolves_per_level: list[int] = field(default_factory=list)
    touches_per_level: list[int] = field(default_factory=list)
    wall_ms: float = 0.0
    precondition_failures: int = 0
    live_size: int = 0

    @property
    def total_touches(self) -> int:
        return sum(self.touches_per_level)

    def to_dict(self) -> dict:
        return {"schema": METRICS_SCHEMA, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class Engine:
    """One bucket heap plus the workers that keep its levels resolved.

    Use as a context manager, or call :meth:`close` to stop the pool.
    """

    def __init__(self, config: EngineConfig):
        self.config = config
        self.heap = BucketHeap(config.d, debug=config.debug_assertions)
        S = self.heap.S
        self.state = DependencyState(counters=S[K.R_SCHED])
        self.front = config.front_levels if config.workers > 1 else K.MAXLV
        self.intervals: list[tuple[int, int, int, int]] = []
        self.wall_ns = 0
        self._cond = threading.Condition()
        self._ready: list[int] = []
        self._error: tuple[int, int] | None = None
        self._stop = False
        self._threads = [
            threading.Thread(target=self._worker, name=f"parbucket-level-{n}", daemon=True)
            for n in range(config.workers - 1)
        ]
        for t in self._threads:
            t.start()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        with self._cond:
            self._stop = True
            self._cond.notify_all()
        for t in self._threads:
            t.join()
        self._threads = []

    # -- pool side

    def _deepest(self) -> int:
        return int(self.heap.S[K.R_META, K.M_NLEV])

    def _pool_candidate(self) -> int | None:
        if self._ready:
            return self._ready.pop(0)
        nlev = self._deepest()
        for i in range(self.front + 1, nlev + 1):
            if self.state.can_resolve(i, nlev):
                self.state.record_start(i, nlev)
                return i
        return None

    def _worker(self) -> None:
        S = self.heap.S
        while True:
            with self._cond:
                while True:
                    if self._stop or self._error is not None:
                        return
                    i = self._pool_candidate()
                    if i is not None:
                        break
                    self._cond.wait()
            t0 = time.perf_counter_ns()
            s = K.resolve_level(S, i)
            while s == K.GROW:
                self.heap.grow((i,))
                s = K.resolve_level(S, i)
            t1 = time.perf_counter_ns()
            with self._cond:
                self.state.record_end(i)
                if self.config.instrument:
                    self.intervals.append((i, i, t0, t1))
                if s != K.OK and self._error is None:
                    self._error = (s, i)
                self._cond.notify_all()

    # -- front side

    def _fail(self, status: int, index) -> None:
        try:
            raise_for_status(status, index)
        except ParBucketError as exc:
            if isinstance(exc, InvariantError):
                exc.metrics = self.snapshot_metrics()
            raise

    def _apply(self, kinds, offsets, counts, values, priorities, outv, outp) -> int:
        """Run ops through the front loop; returns the number of extractions written."""
        S = self.heap.S
        F = self.front
        stop = kinds.shape[0]
        pos = 0
        outn = 0
        t_start = time.perf_counter_ns()
        try:
            while True:
                with self._cond:
                    if self._error is not None:
                        s, i = self._error
                        self._fail(s, None)
                    held = [i for i in self.state.in_flight if i <= F]
                    limit = min(held) - 1 if held else F
                t0 = time.perf_counter_ns()
                pos, outn, s = K.run_ops(S, kinds, offsets, counts, values, priorities,
                                         pos, stop, outv, outp, outn, limit)
                t1 = time.perf_counter_ns()
                if self.config.instrument:
                    self.intervals.append((0, limit - 1, t0, t1))
                if s == K.OK:
                    return outn
                if s == K.GROW:
                    self.heap.grow(range(limit))
                    continue
                if s != K.NEED_DEEPER:
                    self._fail(s, pos)
                with self._cond:
                    self._cond.notify_all()  # front resolves may have made pool levels due
                    nlev = self._deepest()
                    if limit == F and self.state.can_resolve(F, nlev):
                        self.state.record_start(F, nlev)
                        self._ready.append(F)
                        self._cond.notify_all()
                        continue
                    if not self.state.in_flight and not self._ready:
                        if limit < F:
                            continue  # the level we yielded to has finished
                        if self._pool_candidate_peek() is None:
                            raise InvariantError(f"operation {pos}: schedule stalled", self.snapshot_metrics())
                    self._cond.wait(timeout=1.0)
        finally:
            self.wall_ns += time.perf_counter_ns() - t_start

    def _pool_candidate_peek(self) -> int | None:
        if self._ready:
            return self._ready[0]
        nlev = self._deepest()
        for i in range(self.front + 1, nlev + 1):
            if self.state.can_resolve(i, nlev):
                return i
        return None

    def _wait_idle(self) -> None:
        """Let the pool finish everything that is due, then hold it off."""
        with self._cond:
            self._cond.notify_all()
            while self._ready or self.state.in_flight or (self._threads and self._pool_candidate_peek() is not None):
                if self._error is not None:
                    break
                self._cond.wait(timeout=1.0)
            if self._error is not None:
                s, i = self._error
                self._fail(s, None)

    # -- public interface

    def run_trace(self, trace: Trace, *, drain: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Apply every operation of ``trace``; returns the extracted (values, priorities)."""
        if self.config.debug_assertions:
            trace.validate(self.config.d)
        n = trace.extract_count
        outv = np.empty(n, np.int64)
        outp = np.empty(n, np.int64)
        got = self._apply(trace.kinds, trace.offsets, trace.counts, trace.values, trace.priorities, outv, outp)
        if drain:
            self.drain()
        outv, outp = outv[:got], outp[:got]
        if self.config.debug_assertions:
            j = retired_violation(trace, outv)
            if j >= 0:
                raise PreconditionError("value updated after it was extracted", j)
        return outv, outp

    def _one(self, kind: int, values: np.ndarray, priorities: np.ndarray):
        kinds = np.array([kind], np.int8)
        offsets = np.zeros(1, np.int64)
        counts = np.array([values.size], np.int64)
        outv = np.empty(1, np.int64)
        outp = np.empty(1, np.int64)
        got = self._apply(kinds, offsets, counts, values, priorities, outv, outp)
        return got, outv, outp

    def update(self, value: int, priority: int) -> None:
        if priority == K.DEL:
            raise PreconditionError("update with a DEL priority; use delete()")
        self._one(K.OP_UPDATE, np.array([value], np.int64), np.array([priority], np.int64))

    def delete(self, value: int) -> None:
        self._one(K.OP_DELETE, np.array([value], np.int64), np.array([K.DEL], np.int64))

    def bulk_update(self, values, priorities) -> None:
        v = np.ascontiguousarray(values, np.int64)
        p = np.ascontiguousarray(priorities, np.int64)
        if v.size == 0:
            return
        self._one(K.OP_BULK, v, p)

    def extract_min(self) -> Element:
        got, outv, outp = self._one(K.OP_EXTRACT, np.zeros(1, np.int64), np.zeros(1, np.int64))
        if not got:
            raise EmptyHeapError("heap is empty")
        return Element(int(outv[0]), int(outp[0]))

    def drain(self) -> None:
        """Run resolves until every signal buffer is empty; the heap is then quiescent."""
        t = time.perf_counter_ns()
        self._wait_idle()
        with self._cond:
            self.heap.drain()
        self.wall_ns += time.perf_counter_ns() - t

    def snapshot_metrics(self) -> Metrics:
        h = self.heap
        return Metrics(
            ops=h.op_count,
            resolves_per_level=h.resolves_per_level(),
            touches_per_level=h.touches_per_level(),
            wall_ms=self.wall_ns / 1e6,
            precondition_failures=h.precondition_failures,
            live_size=h.live_size,
        )

    def overlap_report(self) -> list[str]:
        """Adjacent-level resolve intervals that overlapped in time (instrumented runs)."""
        return adjacent_overlaps(self.intervals)


def run_trace(config: EngineConfig, trace: Trace) -> tuple[tuple[np.ndarray, np.ndarray], Metrics]:
    """Run ``trace`` on a fresh engine; returns ((values, priorities), metrics)."""
    with Engine(config) as eng:
        res = eng.run_trace(trace)
        return res, eng.snapshot_metrics()


def snapshot_metrics(engine: Engine) -> Metrics:
    return engine.snapshot_metrics()
