"""Directed graphs in CSR form, seeded generators and the edge-list text format.

Edge-list format: first line ``V E``, then one ``src dst weight`` line per
edge.  Weights are non-negative integers.  Self-loops and parallel edges are
not allowed.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, PreconditionError

DEFAULT_MAX_WEIGHT = 10**6


@dataclass(eq=False)
class CsrGraph:
    vertex_count: int
    offsets: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.targets.size)

    @property
    def V(self) -> int:
        return self.vertex_count

    @property
    def E(self) -> int:
        return self.edge_count

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def max_out_degree(self) -> int:
        return int(self.out_degrees().max()) if self.vertex_count else 0

    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.vertex_count, dtype=np.int64), self.out_degrees())

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.offsets[u], self.offsets[u + 1]
        return self.targets[a:b], self.weights[a:b]

    def validate(self) -> list[str]:
        """Violated CSR invariants; empty when well formed."""
        out = []
        V, E = self.vertex_count, self.edge_count
        if self.offsets.size != V + 1 or self.offsets[0] != 0 or self.offsets[-1] != E:
            out.append("offsets must have V+1 entries running from 0 to E")
        elif np.any(np.diff(self.offsets) < 0):
            out.append("offsets decrease")
        if self.weights.size != E:
            out.append("weights and targets differ in length")
        if E and (self.targets.min() < 0 or self.targets.max() >= V):
            out.append("target index out of range")
        if E and self.weights.min() < 0:
            out.append("negative weight")
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsrGraph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.targets, other.targets)
                and np.array_equal(self.weights, other.weights))


def from_edges(V: int, src, dst, w) -> CsrGraph:
    """Build a CSR graph; edges are ordered by (source, target)."""
    src = np.asarray(src, np.int64)
    dst = np.asarray(dst, np.int64)
    w = np.asarray(w, np.int64)
    order = np.lexsort((dst, src))
    counts = np.bincount(src, minlength=V) if src.size else np.zeros(V, np.int64)
    offsets = np.zeros(V + 1, np.int64)
    np.cumsum(counts, out=offsets[1:])
    return CsrGraph(int(V), offsets, dst[order], w[order])


def _pairs(V: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # index over ordered pairs u != v, row-major by u
    u = idx // (V - 1)
    r = idx % (V - 1)
    return u, r + (r >= u)


def _weights(rng, n: int, lo: int, hi: int) -> np.ndarray:
    return rng.integers(lo, hi, size=n, endpoint=True, dtype=np.int64)


def gen_random(V: int, E: int, max_weight: int = DEFAULT_MAX_WEIGHT, seed: int = 0) -> CsrGraph:
    """E distinct directed edges drawn uniformly from all ordered pairs; weights in [1, max_weight]."""
    if V < 1 or E < 0 or E > V * (V - 1):
        raise PreconditionError(f"cannot place E={E} distinct edges on V={V} vertices")
    if max_weight < 1:
        raise PreconditionError("max_weight must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(V * (V - 1), size=E, replace=False) if E else np.zeros(0, np.int64)
    u, v = _pairs(V, idx)
    return from_edges(V, u, v, _weights(rng, E, 1, max_weight))


def gen_high_diameter(V: int, E: int, max_weight: int = DEFAULT_MAX_WEIGHT, seed: int = 0) -> CsrGraph:
    """Unit-weight chain 0->1->...->V-1 plus E-(V-1) random edges of weight >= V.

    Every extra edge costs more than any chain detour it could shortcut, so
    dist(0, i) = i and the shortest path from 0 to V-1 visits all V vertices.
    """
    if V < 2 or E < V - 1 or E > V * (V - 1):
        raise PreconditionError(f"need V-1 <= E <= V(V-1), got V={V}, E={E}")
    if max_weight < 1:
        raise PreconditionError("max_weight must be >= 1")
    rng = np.random.default_rng(seed)
    extra = E - (V - 1)
    chain = np.arange(V - 1, dtype=np.int64) * (V - 1) + np.arange(V - 1)  # pair index of u -> u+1
    if extra:
        x = np.sort(rng.choice(V * (V - 1) - (V - 1), size=extra, replace=False))
        # skip over the chain pairs: the j-th excluded index shifts everything at or above it
        x = x + np.searchsorted(chain - np.arange(V - 1), x, side="right")
        x = rng.permutation(x)
    else:
        x = np.zeros(0, np.int64)
    u, v = _pairs(V, x)
    src = np.concatenate([np.arange(V - 1, dtype=np.int64), u])
    dst = np.concatenate([np.arange(1, V, dtype=np.int64), v])
    w = np.concatenate([np.ones(V - 1, np.int64), _weights(rng, extra, V, V + max_weight - 1)])
    return from_edges(V, src, dst, w)


def gen_dag(V: int, out_degree: int, max_weight: int = DEFAULT_MAX_WEIGHT, seed: int = 0) -> CsrGraph:
    """Forward edges only: vertex v gets min(out_degree, V-1-v) distinct targets above it."""
    if V < 1 or out_degree < 0 or (V > 1 and out_degree >= V):
        raise PreconditionError(f"out_degree must be in [0, V), got {out_degree} for V={V}")
    if max_weight < 1:
        raise PreconditionError("max_weight must be >= 1")
    rng = np.random.default_rng(seed)
    src, dst = [], []
    for v in range(V - 1):
        k = min(out_degree, V - 1 - v)
        if k:
            dst.append(v + 1 + rng.choice(V - 1 - v, size=k, replace=False))
            src.append(np.full(k, v, np.int64))
    src = np.concatenate(src) if src else np.zeros(0, np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, np.int64)
    return from_edges(V, src, dst, _weights(rng, src.size, 1, max_weight))


def gen_complete(V: int, max_weight: int = DEFAULT_MAX_WEIGHT, seed: int = 0) -> CsrGraph:
    """All V(V-1) directed edges with w(u,v) = w(v,u) uniform in [1, max_weight]."""
    if V < 2:
        raise PreconditionError("complete graph needs V >= 2")
    if max_weight < 1:
        raise PreconditionError("max_weight must be >= 1")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(V, k=1)
    w = _weights(rng, iu.size, 1, max_weight)
    return from_edges(V, np.concatenate([iu, ju]), np.concatenate([ju, iu]), np.concatenate([w, w]))


# ---------------------------------------------------------------- edge-list I/O


def format_edge_list(g: CsrGraph) -> str:
    rows = np.column_stack([g.sources(), g.targets, g.weights])
    body = "\n".join(f"{a} {b} {c}" for a, b, c in rows.tolist())
    return f"{g.vertex_count} {g.edge_count}\n" + (body + "\n" if body else "")


def save_edge_list(g: CsrGraph, path) -> None:
    Path(path).write_text(format_edge_list(g))


def _parse_slow(lines: list[str]) -> CsrGraph:
    # line-by-line parse; finds and reports the first bad line
    if not lines:
        raise DataError("empty file", 1)
    head = lines[0].split()
    try:
        V, E = (int(x) for x in head)
    except ValueError:
        raise DataError("first line must be 'V E'", 1) from None
    if V < 0 or E < 0:
        raise DataError("V and E must be non-negative", 1)
    body = [(n, line) for n, line in enumerate(lines[1:], 2) if line.strip()]
    if len(body) != E:
        raise DataError(f"header declares {E} edges, found {len(body)}", len(lines))
    src = np.empty(E, np.int64)
    dst = np.empty(E, np.int64)
    w = np.empty(E, np.int64)
    seen = set()
    for t, (n, line) in enumerate(body):
        parts = line.split()
        try:
            a, b, c = (int(x) for x in parts)
        except ValueError:
            raise DataError(f"expected 'src dst weight', got {line.strip()!r}", n) from None
        if not (0 <= a < V and 0 <= b < V):
            raise DataError(f"vertex out of range in {line.strip()!r}", n)
        if c < 0:
            raise DataError(f"negative weight {c}", n)
        if a == b:
            raise DataError(f"self-loop on vertex {a}", n)
        if (a, b) in seen:
            raise DataError(f"parallel edge {a}->{b}", n)
        seen.add((a, b))
        src[t], dst[t], w[t] = a, b, c
    return from_edges(V, src, dst, w)


def parse_edge_list(text: str) -> CsrGraph:
    lines = text.splitlines()
    try:
        tok = np.array(text.split(), dtype=np.int64)
    except (ValueError, OverflowError):
        return _parse_slow(lines)
    if tok.size < 2 or tok[0] < 0 or tok[1] < 0 or tok.size != 2 + 3 * tok[1]:
        return _parse_slow(lines)
    V, E = int(tok[0]), int(tok[1])
    if any(len(line.split()) not in (0, 3) for line in lines[1:]) or len(lines[0].split()) != 2:
        return _parse_slow(lines)
    e = tok[2:].reshape(E, 3)
    src, dst, w = e[:, 0], e[:, 1], e[:, 2]
    bad = (src < 0) | (src >= V) | (dst < 0) | (dst >= V) | (w < 0) | (src == dst)
    if np.any(bad):
        return _parse_slow(lines)
    key = src * max(V, 1) + dst
    if np.unique(key).size != E:
        return _parse_slow(lines)
    return from_edges(V, src, dst, w)


def load_edge_list(path) -> CsrGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return parse_edge_list(text)
