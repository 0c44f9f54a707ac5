"""Leveled bucket heap: state, level-0 operations, Resolve(i) and invariants.

Elements are ``(value, priority)`` pairs.  Values are non-negative integer keys,
priorities are integers in ``[0, MAX_PRIORITY]``.  A delete signal carries the
priority ``DEL``, which sorts below every valid priority.

Each operation places its signal in ``S_0``; Resolve(0) must run before the
next one.  ``BucketHeap.settle`` runs it together with the deeper resolves
the 4-to-1 rule makes due; ``parbucket.engine`` does the same with worker
threads.
"""

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from . import primitives as P
from .errors import EmptyHeapError, InvariantError, PreconditionError

DEL = K.DEL
INF = K.INF
MAX_PRIORITY = K.MAX_PRIORITY


class Element(NamedTuple):
    value: int
    priority: int

    @property
    def is_delete(self) -> bool:
        return self.priority == DEL


class Splitter(NamedTuple):
    """Composite cut: ``e`` is below it iff ``(e.priority, e.value) <= (priority, tie_value)``."""

    priority: int
    tie_value: int

    @property
    def is_infinite(self) -> bool:
        return self.priority == INF

    def admits(self, e: Element) -> bool:
        return e.priority != DEL and (e.priority, e.value) <= (self.priority, self.tie_value)


INF_SPLITTER = Splitter(INF, INF)


def _arrays(elements: Iterable) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(elements)
    v = np.array([int(e[0]) for e in pairs], dtype=np.int64)
    p = np.array([int(e[1]) for e in pairs], dtype=np.int64)
    return v, p


def _elements(v: np.ndarray, p: np.ndarray) -> list[Element]:
    return [Element(int(a), int(b)) for a, b in zip(v, p)]


def _check_value_sorted(v: np.ndarray, what: str) -> None:
    if v.size > 1 and np.any(np.diff(v) < 0):
        raise PreconditionError(f"{what} is not sorted by value")


# ---------------------------------------------------------------- primitives


def merge_by_value(a: Sequence, b: Sequence) -> list[Element]:
    """Merge two value-sorted sequences; equal values put DEL first, then ascending priority."""
    av, ap = _arrays(a)
    bv, bp = _arrays(b)
    _check_value_sorted(av, "first input")
    _check_value_sorted(bv, "second input")
    # equal values inside one input may come in any priority order
    ia, ib = np.lexsort((ap, av)), np.lexsort((bp, bv))
    return _elements(*P.merge_by_value(av[ia], ap[ia], bv[ib], bp[ib]))


def delete_duplicates(seq: Sequence) -> list[Element]:
    """Keep one element per value of a value-sorted sequence.

    The minimum priority wins.  A DEL annihilates every live element of its
    value together with itself; a DEL without a live match survives.
    """
    v, p = _arrays(seq)
    _check_value_sorted(v, "input")
    ov, op, _ = P.delete_duplicates(v, p, False)
    return _elements(ov, op)


def select_kth(seq: Sequence, k: int) -> Splitter:
    """The k-th smallest ``(priority, value)`` key (1-based) as a splitter."""
    v, p = _arrays(seq)
    if not 1 <= k <= v.size:
        raise PreconditionError(f"k={k} out of range 1..{v.size}")
    if np.any(p == DEL):
        raise PreconditionError("select_kth input contains delete signals")
    sp, sv = P.select_kth(v, p, int(k))
    return Splitter(int(sp), int(sv))


def partition_by_splitter(seq: Sequence, s: Splitter) -> tuple[list[Element], list[Element]]:
    """Split into (low, high) around ``s``; delete signals always go high."""
    v, p = _arrays(seq)
    lv, lp, hv, hp = P.partition_by_splitter(v, p, int(s[0]), int(s[1]))
    return _elements(lv, lp), _elements(hv, hp)


# ---------------------------------------------------------------- heap


@dataclass(frozen=True)
class Level:
    index: int
    bucket: list[Element]
    signal: list[Element]
    splitter: Splitter
    resolve_count: int


_STATUS_ERRORS = {
    K.EMPTY: (EmptyHeapError, "heap is empty"),
    K.INVARIANT: (InvariantError, "B_0 is empty while deeper levels hold elements"),
    K.BAD_BATCH: (PreconditionError, "batch must be strictly increasing by value with at most d elements"),
    K.S0_BUSY: (InvariantError, "S_0 is not empty; Resolve(0) must run between operations"),
    K.BAD_PRIORITY: (PreconditionError, "values must be >= 0 and priorities in [0, MAX_PRIORITY]"),
    K.PRECONDITION: (InvariantError, "resolve precondition failed"),
    K.TOO_DEEP: (InvariantError, "level limit exceeded"),
}


def raise_for_status(status: int, index=None) -> None:
    if status == K.OK or status == K.NEED_DEEPER:
        return
    cls, msg = _STATUS_ERRORS[status]
    if cls is PreconditionError:
        raise PreconditionError(msg, index)
    if index is not None:
        msg = f"operation {index}: {msg}"
    raise cls(msg)


class BucketHeap:
    """Bucket heap with batch parameter ``d``.

    ``debug`` enables resolve/extract precondition checks; failures are
    counted in :attr:`precondition_failures` and raise :class:`InvariantError`.
    ``record_events`` reserves room for that many ``(level, k, touches)``
    resolve records (see :meth:`resolve_events`).

    With ``auto_settle`` (the default) every operation is followed by
    :meth:`settle`, which runs Resolve(0) and every deeper resolve the 4-to-1
    rule makes due.  Without it the caller drives resolves by hand.

    State lives in the int64 matrix ``S`` (see ``_kernels``); the level
    buffers are numpy arrays kept alive in ``_bufs``.
    """

    def __init__(self, d: int, *, debug: bool = False, record_events: int = 0, auto_settle: bool = True):
        if int(d) < 1:
            raise PreconditionError(f"d must be >= 1, got {d}")
        self.d = int(d)
        self.debug = bool(debug)
        self.auto_settle = bool(auto_settle)
        S = np.zeros((K.NROW, K.NCOL), np.int64)
        S[K.R_META, K.M_D] = self.d
        S[K.R_META, K.M_NLEV] = 1
        S[K.R_META, K.M_DEBUG] = int(self.debug)
        S[K.R_SPP] = INF
        S[K.R_SPV] = INF
        self.S = S
        self._bufs: dict[tuple[int, int], np.ndarray] = {}
        for slot, cap in ((K.BV, 2 * self.d), (K.BP, 2 * self.d), (K.SV, self.d), (K.SP, self.d)):
            self._set_buf(slot, 0, np.zeros(cap, np.int64))
        self._events = np.zeros((max(int(record_events), 0), 3), np.int64)
        if record_events > 0:
            S[K.R_META, K.M_RECORD] = 1
            S[K.R_META, K.M_EVCAP] = self._events.shape[0]
            S[K.R_META, K.M_EVPTR] = self._events.ctypes.data

    def _set_buf(self, slot: int, level: int, arr: np.ndarray) -> None:
        self._bufs[(slot, level)] = arr
        self.S[K.R_PTR + slot, level] = arr.ctypes.data
        self.S[K.R_CAP + slot, level] = arr.size

    def grow(self, columns=None) -> None:
        """Serve pending buffer requests recorded by a kernel that returned GROW.

        ``columns`` limits the service to requests made by those levels'
        resolves; concurrent callers must pass the levels they own.
        """
        S = self.S
        cols = np.flatnonzero(S[K.R_GNEED]) if columns is None else [c for c in columns if S[K.R_GNEED, c]]
        for col in cols:
            code, need = int(S[K.R_GSLOT, col]), int(S[K.R_GNEED, col])
            slot, level = divmod(code, K.NCOL)
            old = self._bufs.get((slot, level))
            cap = max(need, 2 * int(S[K.R_CAP + slot, level]), 16)
            arr = np.zeros(cap, np.int64)
            if old is not None:
                arr[: old.size] = old
            self._set_buf(slot, level, arr)
            S[K.R_GNEED, col] = 0

    def call(self, kernel, *args):
        """Run ``kernel(S, *args)``, growing buffers and retrying while it asks for room.

        The kernel's first (or only) result must be its status.
        """
        while True:
            r = kernel(self.S, *args)
            s = r[0] if isinstance(r, tuple) else r
            if s != K.GROW:
                return r
            self.grow()

    # -- shape

    def capacities(self, i: int) -> tuple[int, int]:
        """(signal capacity, bucket capacity) of level ``i``."""
        s = self.d << (2 * i)
        return s, 2 * s

    @property
    def level_count(self) -> int:
        return int(self.S[K.R_META, K.M_NLEV])

    def _view(self, slot: int, i: int, n: int) -> np.ndarray:
        a = self._bufs.get((slot, i))
        return a[:n] if a is not None else np.zeros(0, np.int64)

    def level_arrays(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Views (bucket values, bucket priorities, signal values, signal priorities) of level i."""
        nb, ns = int(self.S[K.R_NB, i]), int(self.S[K.R_NS, i])
        return self._view(K.BV, i, nb), self._view(K.BP, i, nb), self._view(K.SV, i, ns), self._view(K.SP, i, ns)

    def splitter(self, i: int) -> Splitter:
        return Splitter(int(self.S[K.R_SPP, i]), int(self.S[K.R_SPV, i]))

    @property
    def levels(self) -> list[Level]:
        out = []
        for i in range(self.level_count):
            bv, bp, sv, sp = self.level_arrays(i)
            out.append(Level(
                index=i,
                bucket=_elements(bv, bp),
                signal=_elements(sv, sp),
                splitter=self.splitter(i),
                resolve_count=int(self.S[K.R_RES, i]),
            ))
        return out

    @property
    def op_count(self) -> int:
        return int(self.S[K.R_META, K.M_OPS])

    @property
    def live_size(self) -> int:
        """Stored live elements, counting stale copies not yet annihilated."""
        return int(self.S[K.R_LIVE].sum())

    @property
    def stored_size(self) -> int:
        """Elements held in buckets and signal buffers, delete signals included."""
        return int(self.S[K.R_NB].sum() + self.S[K.R_NS].sum())

    @property
    def precondition_failures(self) -> int:
        return int(self.S[K.R_PRE].sum())

    @property
    def postcondition_failures(self) -> int:
        return int(self.S[K.R_POST].sum())

    def touches_per_level(self) -> list[int]:
        return [int(x) for x in self.S[K.R_TOUCH, : self.level_count]]

    def resolves_per_level(self) -> list[int]:
        return [int(x) for x in self.S[K.R_RES, : self.level_count]]

    def resolve_events(self) -> np.ndarray:
        """Recorded ``(level, k, touches)`` rows, in execution order."""
        n = int(self.S[K.R_META, K.M_NEV])
        return self._events[:n].copy()

    # -- operations

    def _after_op(self) -> None:
        if self.auto_settle:
            self.settle()

    def settle(self) -> None:
        """Run the pending Resolve(0) and every deeper resolve that is due."""
        before = self.precondition_failures
        s = self.call(K.settle, K.MAXLV)
        if s == K.PRECONDITION or self.precondition_failures != before:
            raise InvariantError("resolve precondition failed")
        raise_for_status(s)

    def find_min(self) -> Element:
        idx = K.find_min_index(self.S)
        if idx < 0:
            raise_for_status(K.EMPTY if self.S[K.R_SPP, 0] == INF else K.INVARIANT)
        return Element(int(self._bufs[(K.BV, 0)][idx]), int(self._bufs[(K.BP, 0)][idx]))

    def extract_min(self) -> Element:
        before = int(self.S[K.R_PRE, K.EXTRACT_SLOT])
        s, v, p = K.op_extract(self.S)
        if self.debug and self.S[K.R_PRE, K.EXTRACT_SLOT] != before:
            raise InvariantError("extract_min precondition failed: |B_0| < d with deeper levels")
        raise_for_status(s)
        self._after_op()
        return Element(int(v), int(p))

    def update(self, value: int, priority: int) -> None:
        if priority == DEL:
            raise PreconditionError("update with a DEL priority; use delete()")
        raise_for_status(K.op_update(self.S, int(value), int(priority)))
        self._after_op()

    def delete(self, value: int) -> None:
        raise_for_status(K.op_delete(self.S, int(value)))
        self._after_op()

    def bulk_update(self, elements: Sequence) -> None:
        v, p = _arrays(elements)
        if v.size > self.d:
            raise PreconditionError(f"batch of {v.size} exceeds d={self.d}")
        if np.any(p == DEL):
            raise PreconditionError("bulk_update with a DEL priority")
        raise_for_status(K.op_bulk(self.S, v, p))
        self._after_op()

    def resolve(self, i: int) -> None:
        """Resolve(i); a resolve past the deepest level only bumps its counter."""
        if not 0 <= i < K.MAXLV:
            raise PreconditionError(f"level {i} out of range")
        s = self.call(K.resolve_level, int(i))
        if i == 0 and self.S[K.R_META, K.M_PENDING]:
            # this is the resolve the last operation was waiting for
            self.S[K.R_META, K.M_PENDING] = 0
            self.S[K.R_SCHED, 0] += 1
        raise_for_status(s)

    def drain(self) -> None:
        """Empty every signal buffer so the heap is quiescent."""
        raise_for_status(self.call(K.drain))

    # -- testing and inspection

    def set_level(self, i: int, bucket=(), signal=(), splitter: Splitter | None = None) -> None:
        """Overwrite the contents of level ``i`` (for tests and fault injection).

        Allocates levels up to ``i`` and adjusts the live count.
        """
        S = self.S
        _, obp, _, osp = self.level_arrays(i)
        old = int(np.count_nonzero(obp != DEL) + np.count_nonzero(osp != DEL))
        bv, bp = _arrays(bucket)
        sv, sp = _arrays(signal)
        for slot, data in ((K.BV, bv), (K.BP, bp), (K.SV, sv), (K.SP, sp)):
            arr = self._bufs.get((slot, i))
            if arr is None or arr.size < data.size:
                arr = np.zeros(max(data.size, 16), np.int64)
                self._set_buf(slot, i, arr)
            arr[: data.size] = data
        S[K.R_NB, i], S[K.R_NS, i] = bv.size, sv.size
        if splitter is not None:
            S[K.R_SPP, i], S[K.R_SPV, i] = int(splitter[0]), int(splitter[1])
        S[K.R_META, K.M_NLEV] = max(self.level_count, i + 1)
        S[K.R_LIVE, i] += int(np.count_nonzero(bp != DEL) + np.count_nonzero(sp != DEL)) - old

    def check_invariants(self) -> list[str]:
        """Violated structural invariants at quiescence; empty when healthy."""
        out: list[str] = []
        nlev = self.level_count
        for i in range(nlev):
            cap_s, cap_b = self.capacities(i)
            bv, bp, sv, sp = self.level_arrays(i)
            for name, v in (("bucket", bv), ("signal", sv)):
                if v.size > 1 and np.any(np.diff(v) <= 0):
                    out.append(f"level {i}: {name} not strictly increasing by value")
            if bv.size > cap_b:
                out.append(f"level {i}: bucket holds {bv.size} > capacity {cap_b}")
            if sv.size > cap_s:
                out.append(f"level {i}: signal holds {sv.size} > capacity {cap_s}")
            if np.any(bp == DEL):
                out.append(f"level {i}: bucket contains a delete signal")
            if np.any((bp < DEL) | (bp > MAX_PRIORITY)) or np.any((sp < DEL) | (sp > MAX_PRIORITY)):
                out.append(f"level {i}: priority out of range")
            spl = tuple(self.splitter(i))
            if bv.size and spl[0] != INF:
                t = np.lexsort((bv, bp))[-1]
                kmax = (int(bp[t]), int(bv[t]))
                if kmax > spl:
                    out.append(f"level {i}: bucket maximum {kmax} exceeds splitter {spl}")
            if i > 0 and spl < tuple(self.splitter(i - 1)):
                out.append(f"level {i}: splitter below level {i - 1} splitter")
        # heap property; a copy whose value also sits at a shallower level is
        # superseded and waits there for its delete signal, so it is exempt
        seen = np.empty(0, np.int64)
        for j in range(nlev):
            bv, bp, sv, sp = self.level_arrays(j)
            fresh = ~np.isin(bv, seen)
            if j > 0 and np.any(fresh):
                t = np.lexsort((bv[fresh], bp[fresh]))[0]
                kmin = (int(bp[fresh][t]), int(bv[fresh][t]))
                for i in range(j):
                    spl = tuple(self.splitter(i))
                    if spl[0] == INF or kmin <= spl:
                        out.append(f"heap property: level {j} minimum {kmin} not above splitter {spl} of level {i}")
            seen = np.union1d(seen, np.concatenate([bv, sv]))
        n = max(self.op_count, self.d)
        bound = int(np.ceil(np.log(n / self.d) / np.log(4) - 1e-12)) + 2
        if nlev > max(bound, 1):
            out.append(f"{nlev} levels allocated after {self.op_count} operations (bound {bound})")
        return out


def new(d: int, **kwargs) -> BucketHeap:
    return BucketHeap(d, **kwargs)
