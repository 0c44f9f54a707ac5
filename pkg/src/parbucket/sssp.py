"""Single-source shortest paths on the bucket heap, plus reference solvers.

``par_dijkstra`` settles one vertex per round: it extracts the minimum,
relaxes the out-edges of that vertex and sends every improved neighbour to
the heap in one ``bulk_update``.  ``reference_dijkstra``, ``bellman_ford``
and ``floyd_warshall`` are independent implementations used as oracles and
baselines.

Distances are int64.  ``UNREACHABLE`` marks vertices with no path.
"""

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _kernels as K
from .engine import Engine, EngineConfig, Metrics
from .errors import DataError, EmptyHeapError, PreconditionError
from .graphs import CsrGraph
from .oracle import heap_pop, heap_update

UNREACHABLE = np.iinfo(np.int64).max
FW_INF = 1 << 61
FW_MAX_VERTICES = 4096
CSV_SCHEMA = "parbucket.sssp/1"


@dataclass
class SsspResult:
    dist: np.ndarray
    settled_order: np.ndarray
    rounds: int
    pred: np.ndarray | None = None
    extracts: int = 0
    stale_pops: int = 0
    bulk_elements: int = 0
    bulk_updates: int = 0
    metrics: Metrics | None = None
    extra: dict = field(default_factory=dict)

    @property
    def reachable(self) -> int:
        return int(np.count_nonzero(self.dist != UNREACHABLE))

    def checksum(self) -> str:
        return distance_checksum(self.dist)


def distance_checksum(dist: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(dist, np.int64).tobytes()).hexdigest()[:16]


def _check_source(g: CsrGraph, source: int) -> None:
    if not 0 <= source < g.vertex_count:
        raise PreconditionError(f"source {source} out of range for V={g.vertex_count}")


def par_dijkstra(g: CsrGraph, source: int, config: EngineConfig | None = None, *,
                 dag: bool = False) -> SsspResult:
    """Dijkstra on the bucket heap with one bulk update per settled vertex.

    ``config.d`` defaults to the maximum out-degree when ``config`` is None.
    Rounds with more than d improved neighbours are split into several bulk
    updates.  ``dag=True`` drops the settled-vertex lookup when relaxing; on
    any graph this is safe because a settled vertex never improves, and on
    DAGs it saves the random access.
    """
    _check_source(g, source)
    if config is None:
        config = EngineConfig(d=max(1, g.max_out_degree()))
    d = config.d
    V = g.vertex_count
    dist = np.full(V, UNREACHABLE, np.int64)
    settled = np.zeros(V, np.bool_)
    order = np.empty(V, np.int64)
    rounds = extracts = stale = bulk_elems = bulk_ops = 0
    offsets, targets, weights = g.offsets, g.targets, g.weights
    with Engine(config) as eng:
        dist[source] = 0
        eng.update(source, 0)
        while True:
            try:
                v, p = eng.extract_min()
            except EmptyHeapError:
                break
            extracts += 1
            if settled[v]:
                stale += 1
                continue
            settled[v] = True
            order[rounds] = v
            rounds += 1
            a, b = offsets[v], offsets[v + 1]
            if a == b:
                continue
            t = targets[a:b]
            w = weights[a:b]
            if np.any(w > K.MAX_PRIORITY - p):
                raise DataError(f"distance overflow relaxing edges of vertex {v}")
            nd = p + w
            keep = nd < dist[t]
            if not dag:
                keep &= ~settled[t]
            t, nd = t[keep], nd[keep]
            if t.size == 0:
                continue
            # combine repeated targets by minimum, then sort by vertex
            srt = np.lexsort((nd, t))
            t, nd = t[srt], nd[srt]
            first = np.ones(t.size, np.bool_)
            first[1:] = t[1:] != t[:-1]
            t, nd = t[first], nd[first]
            dist[t] = nd
            for c in range(0, t.size, d):
                eng.bulk_update(t[c:c + d], nd[c:c + d])
                bulk_ops += 1
            bulk_elems += t.size
        eng.drain()
        metrics = eng.snapshot_metrics()
    return SsspResult(dist, order[:rounds].copy(), rounds, extracts=extracts, stale_pops=stale,
                      bulk_elements=bulk_elems, bulk_updates=bulk_ops, metrics=metrics)


@njit(cache=True)
def _dijkstra(offsets, targets, weights, source, V):
    heap = np.empty(V, np.int64)
    pos = np.full(V, -1, np.int64)
    prio = np.zeros(V, np.int64)
    val = np.arange(V).astype(np.int64)
    dist = np.full(V, UNREACHABLE, np.int64)
    pred = np.full(V, -1, np.int64)
    done = np.zeros(V, np.bool_)
    order = np.empty(V, np.int64)
    n = heap_update(heap, pos, prio, val, 0, source, 0)
    dist[source] = 0
    r = 0
    while n > 0:
        u, n = heap_pop(heap, pos, prio, val, n)
        done[u] = True
        order[r] = u
        r += 1
        du = dist[u]
        for e in range(offsets[u], offsets[u + 1]):
            x = targets[e]
            if done[x]:
                continue
            nd = du + weights[e]
            if nd < dist[x]:
                dist[x] = nd
                pred[x] = u
                n = heap_update(heap, pos, prio, val, n, x, nd)
    return dist, pred, order[:r]


def reference_dijkstra(g: CsrGraph, source: int) -> SsspResult:
    """Binary-heap Dijkstra with (distance, vertex) tie-breaking; also returns predecessors."""
    _check_source(g, source)
    dist, pred, order = _dijkstra(g.offsets, g.targets, g.weights, int(source), g.vertex_count)
    return SsspResult(dist, order, int(order.size), pred=pred)


@njit(cache=True)
def _bellman_ford(offsets, targets, weights, source, V):
    dist = np.full(V, UNREACHABLE, np.int64)
    dist[source] = 0
    nxt = dist.copy()
    changed_sweeps = 0
    for _ in range(max(V - 1, 1)):
        changed = False
        for u in range(V):
            du = dist[u]
            if du == UNREACHABLE:
                continue
            for e in range(offsets[u], offsets[u + 1]):
                x = targets[e]
                nd = du + weights[e]
                if nd < nxt[x]:
                    nxt[x] = nd
                    changed = True
        if not changed:
            break
        dist[:] = nxt
        changed_sweeps += 1
    return dist, changed_sweeps


def bellman_ford(g: CsrGraph, source: int) -> SsspResult:
    """Synchronous (Jacobi) Bellman-Ford: every sweep relaxes all edges from the previous distances.

    ``rounds`` is the number of sweeps that changed a distance, at least 1.
    """
    _check_source(g, source)
    dist, sweeps = _bellman_ford(g.offsets, g.targets, g.weights, int(source), g.vertex_count)
    reach = np.flatnonzero(dist != UNREACHABLE)
    order = reach[np.lexsort((reach, dist[reach]))]
    return SsspResult(dist, order, max(1, int(sweeps)))


@njit(inline="always")
def _fw_block(D, i0, i1, j0, j1, k0, k1):
    for k in range(k0, k1):
        for i in range(i0, i1):
            dik = D[i, k]
            if dik >= FW_INF:
                continue
            for j in range(j0, j1):
                s = dik + D[k, j]
                if s < D[i, j]:
                    D[i, j] = s


@njit(cache=True)
def _floyd_warshall(D, bs):
    n = D.shape[0]
    nb = (n + bs - 1) // bs
    for kb in range(nb):
        k0 = kb * bs
        k1 = min(n, k0 + bs)
        _fw_block(D, k0, k1, k0, k1, k0, k1)
        for b in range(nb):
            if b == kb:
                continue
            b0 = b * bs
            b1 = min(n, b0 + bs)
            _fw_block(D, k0, k1, b0, b1, k0, k1)
            _fw_block(D, b0, b1, k0, k1, k0, k1)
        for ib in range(nb):
            if ib == kb:
                continue
            i0 = ib * bs
            i1 = min(n, i0 + bs)
            for jb in range(nb):
                if jb == kb:
                    continue
                j0 = jb * bs
                _fw_block(D, i0, i1, j0, min(n, j0 + bs), k0, k1)


def floyd_warshall(g: CsrGraph, block: int = 64) -> np.ndarray:
    """All-pairs distances by blocked Floyd-Warshall; unreachable pairs hold UNREACHABLE."""
    V = g.vertex_count
    if V > FW_MAX_VERTICES:
        raise PreconditionError(f"floyd_warshall needs V <= {FW_MAX_VERTICES}, got {V}")
    if g.edge_count and int(g.weights.max()) >= FW_INF // max(V, 1):
        raise DataError("edge weights too large for the all-pairs matrix")
    D = np.full((V, V), FW_INF, np.int64)
    D[g.sources(), g.targets] = g.weights
    np.fill_diagonal(D, 0)
    _floyd_warshall(D, int(block))
    D[D >= FW_INF] = UNREACHABLE
    return D


def path_to(pred: np.ndarray, target: int) -> list[int]:
    """Vertices on the predecessor-tree path ending at ``target`` (empty if unreachable)."""
    out = []
    v = int(target)
    while v >= 0:
        out.append(v)
        v = int(pred[v])
        if len(out) > pred.size:
            raise DataError("predecessor array has a cycle")
    return out[::-1]


def format_distances(dist: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={CSV_SCHEMA}\nvertex,dist\n")
    for v, x in enumerate(dist.tolist()):
        buf.write(f"{v},{'inf' if x == UNREACHABLE else x}\n")
    return buf.getvalue()


def parse_distances(text: str) -> np.ndarray:
    rows = [(n, line) for n, line in enumerate(text.splitlines(), 1) if line and not line.startswith("#")]
    if not rows or rows[0][1].strip() != "vertex,dist":
        raise DataError("missing header vertex,dist", rows[0][0] if rows else 1)
    out = np.empty(len(rows) - 1, np.int64)
    for t, (n, line) in enumerate(rows[1:]):
        parts = line.split(",")
        try:
            v = int(parts[0])
            x = UNREACHABLE if parts[1].strip() == "inf" else int(parts[1])
        except (ValueError, IndexError):
            raise DataError(f"malformed row {line!r}", n) from None
        if v != t:
            raise DataError(f"expected vertex {t}, found {v}", n)
        out[t] = x
    return out
