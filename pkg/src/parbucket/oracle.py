"""Reference priority queues used as test oracles.

Both queues order by ``(priority, value)`` and support decrease-key and
removal.  ``ReferenceQueue`` is plain Python on ``heapq`` with lazy deletion;
``replay`` runs an indexed binary heap compiled with numba for long traces.
Neither shares code with the bucket heap.
"""

import heapq

import numpy as np
from numba import njit

from .errors import EmptyHeapError, PreconditionError
from .traces import Trace

_UPDATE, _BULK, _EXTRACT, _DELETE = 0, 1, 2, 3


class ReferenceQueue:
    """Binary-heap priority queue with decrease-only updates and lazy delete."""

    def __init__(self):
        self._heap: list[tuple[int, int]] = []
        self._best: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._best)

    def update(self, value: int, priority: int) -> None:
        cur = self._best.get(value)
        if cur is None or priority < cur:
            self._best[value] = priority
            heapq.heappush(self._heap, (priority, value))

    def delete(self, value: int) -> None:
        self._best.pop(value, None)

    def extract_min(self) -> tuple[int, int]:
        while self._heap:
            p, v = heapq.heappop(self._heap)
            if self._best.get(v) == p:
                del self._best[v]
                return v, p
        raise EmptyHeapError("reference queue is empty")

    def apply(self, trace: Trace) -> list[tuple[int, int]]:
        out = []
        for op in trace.ops():
            if op[0] == "U":
                self.update(op[1], op[2])
            elif op[0] == "B":
                for v, p in op[1]:
                    self.update(v, p)
            elif op[0] == "D":
                self.delete(op[1])
            else:
                out.append(self.extract_min())
        return out


# ---------------------------------------------------------------- indexed heap
# ids are dense 0..n-1; keys live in prio[id], val[id]; pos[id] = -1 when absent


@njit(inline="always")
def _less(prio, val, a, b):
    return prio[a] < prio[b] or (prio[a] == prio[b] and val[a] < val[b])


@njit(cache=True)
def _sift_up(heap, pos, prio, val, t):
    x = heap[t]
    while t > 0:
        parent = (t - 1) >> 1
        y = heap[parent]
        if not _less(prio, val, x, y):
            break
        heap[t] = y
        pos[y] = t
        t = parent
    heap[t] = x
    pos[x] = t


@njit(cache=True)
def _sift_down(heap, pos, prio, val, t, n):
    x = heap[t]
    while True:
        c = 2 * t + 1
        if c >= n:
            break
        if c + 1 < n and _less(prio, val, heap[c + 1], heap[c]):
            c += 1
        if not _less(prio, val, heap[c], x):
            break
        heap[t] = heap[c]
        pos[heap[t]] = t
        t = c
    heap[t] = x
    pos[x] = t


@njit(cache=True)
def heap_update(heap, pos, prio, val, n, x, p):
    """Insert or decrease; returns the new size."""
    if pos[x] < 0:
        prio[x] = p
        heap[n] = x
        pos[x] = n
        _sift_up(heap, pos, prio, val, n)
        return n + 1
    if p < prio[x]:
        prio[x] = p
        _sift_up(heap, pos, prio, val, pos[x])
    return n


@njit(cache=True)
def heap_remove(heap, pos, prio, val, n, x):
    """Remove id ``x`` if present; returns the new size."""
    t = pos[x]
    if t < 0:
        return n
    n -= 1
    pos[x] = -1
    if t == n:
        return n
    y = heap[n]
    heap[t] = y
    pos[y] = t
    _sift_up(heap, pos, prio, val, t)
    _sift_down(heap, pos, prio, val, pos[y], n)
    return n


@njit(cache=True)
def heap_pop(heap, pos, prio, val, n):
    """Remove the minimum; returns (id, new size)."""
    x = heap[0]
    n = heap_remove(heap, pos, prio, val, n, x)
    return x, n


@njit(cache=True)
def _replay(kinds, offsets, counts, ids, pris, val, nvals):
    heap = np.empty(nvals, np.int64)
    pos = np.full(nvals, -1, np.int64)
    prio = np.zeros(nvals, np.int64)
    n_ext = 0
    for k in kinds:
        if k == _EXTRACT:
            n_ext += 1
    outv = np.empty(n_ext, np.int64)
    outp = np.empty(n_ext, np.int64)
    n = 0
    e = 0
    for j in range(kinds.shape[0]):
        k = kinds[j]
        o = offsets[j]
        if k == _UPDATE or k == _BULK:
            for t in range(o, o + counts[j]):
                n = heap_update(heap, pos, prio, val, n, ids[t], pris[t])
        elif k == _DELETE:
            n = heap_remove(heap, pos, prio, val, n, ids[o])
        else:
            if n == 0:
                return outv[:e], outp[:e], j
            x, n = heap_pop(heap, pos, prio, val, n)
            outv[e] = val[x]
            outp[e] = prio[x]
            e += 1
    return outv, outp, -1


def replay(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    """Extraction sequence ``(values, priorities)`` of ``trace``.

    Raises EmptyHeapError naming the first extract on an empty queue.
    """
    uniq, ids = np.unique(trace.values, return_inverse=True)
    outv, outp, bad = _replay(
        trace.kinds, trace.offsets, trace.counts, ids.astype(np.int64), trace.priorities,
        uniq.astype(np.int64), max(uniq.size, 1),
    )
    if bad >= 0:
        raise EmptyHeapError(f"operation {bad}: extract on an empty queue")
    return outv, outp


def retired_violation(trace: Trace, outv: np.ndarray) -> int:
    """Index of the first op that updates an already extracted value, or -1."""
    ext_at = np.flatnonzero(trace.kinds == _EXTRACT)
    if outv.size == 0:
        return -1
    first_ext = {}
    for j, v in zip(ext_at[: outv.size], outv):
        first_ext.setdefault(int(v), int(j))
    for j in np.flatnonzero((trace.kinds == _UPDATE) | (trace.kinds == _BULK)):
        o, c = trace.offsets[j], trace.counts[j]
        for v in trace.values[o:o + c]:
            t = first_ext.get(int(v))
            if t is not None and t < j:
                return int(j)
    return -1


def check_replayable(trace: Trace, d: int) -> None:
    """Static preconditions plus the extract-then-update rule; raises PreconditionError."""
    trace.validate(d)
    outv, _ = replay(trace)
    j = retired_violation(trace, outv)
    if j >= 0:
        raise PreconditionError("value updated after it was extracted", j)
