"""Seeded random operation traces that obey the replay preconditions."""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .oracle import heap_pop, heap_remove, heap_update
from .traces import Trace


@dataclass(frozen=True)
class TraceMix:
    """Operation probabilities plus knobs for the random stream."""

    update: float = 0.60
    extract: float = 0.25
    delete: float = 0.10
    bulk: float = 0.05
    decrease: float = 0.20       # share of updates that lower an existing key
    delete_live: float = 0.70    # share of deletes aimed at a live value
    priority_range: int = 1 << 16


@njit(cache=True)
def _mix_value(c):
    # odd multiplier: a bijection on 32-bit counters, so values never repeat
    return (c * 2654435761) & 0xFFFFFFFF


@njit(cache=True)
def _pick_live(heap, n):
    return heap[np.random.randint(0, n)]


@njit(cache=True)
def _generate(n_ops, d, seed, cum, p_dec, p_del_live, prange):
    np.random.seed(seed)
    kinds = np.empty(n_ops, np.int8)
    offsets = np.empty(n_ops, np.int64)
    counts = np.zeros(n_ops, np.int64)
    cap = n_ops * d + 1
    values = np.empty(cap, np.int64)
    pris = np.empty(cap, np.int64)
    # live set kept in an indexed heap over counter ids
    heap = np.empty(cap, np.int64)
    pos = np.full(cap, -1, np.int64)
    prio = np.zeros(cap, np.int64)
    val = np.empty(cap, np.int64)
    for c in range(cap):
        val[c] = _mix_value(c)
    n = 0
    stamp = np.zeros(cap, np.int64)
    counter = 0
    m = 0
    tmp_c = np.empty(d, np.int64)
    tmp_p = np.empty(d, np.int64)
    for j in range(n_ops):
        r = np.random.random()
        offsets[j] = m
        if r < cum[0] or (r < cum[1] and n == 0):
            if n > 0 and np.random.random() < p_dec:
                c = _pick_live(heap, n)
                p = np.random.randint(0, prio[c] + 1)
            else:
                c = counter
                counter += 1
                p = np.random.randint(0, prange)
            n = heap_update(heap, pos, prio, val, n, c, p)
            kinds[j] = 0
            values[m] = val[c]
            pris[m] = p
            counts[j] = 1
            m += 1
        elif r < cum[1]:
            kinds[j] = 2
            c, n = heap_pop(heap, pos, prio, val, n)
        elif r < cum[2]:
            kinds[j] = 3
            if n > 0 and np.random.random() < p_del_live:
                c = _pick_live(heap, n)
                n = heap_remove(heap, pos, prio, val, n, c)
            else:
                c = counter  # never inserted; the counter is burnt
                counter += 1
            values[m] = val[c]
            pris[m] = -1
            counts[j] = 1
            m += 1
        else:
            kinds[j] = 1
            k = np.random.randint(1, d + 1)
            for t in range(k):
                c = -1
                if n > 0 and np.random.random() < p_dec:
                    c = _pick_live(heap, n)
                    if stamp[c] == j + 1:
                        c = -1
                if c < 0:
                    c = counter
                    counter += 1
                    p = np.random.randint(0, prange)
                else:
                    p = np.random.randint(0, prio[c] + 1)
                stamp[c] = j + 1
                tmp_c[t] = c
                tmp_p[t] = p
            order = np.argsort(val[tmp_c[:k]])
            for t in range(k):
                c = tmp_c[order[t]]
                values[m + t] = val[c]
                pris[m + t] = tmp_p[order[t]]
                n = heap_update(heap, pos, prio, val, n, c, tmp_p[order[t]])
            counts[j] = k
            m += k
    return kinds, offsets, counts, values[:m].copy(), pris[:m].copy()


def random_trace(n_ops: int, d: int, seed: int, mix: TraceMix = TraceMix()) -> Trace:
    """Seeded random trace obeying the replay preconditions.

    New values come from a bijective hash of a counter, so nothing is ever
    re-inserted after an extract or delete.  An extract drawn while the live
    set is empty becomes an update instead.
    """
    total = mix.update + mix.extract + mix.delete + mix.bulk
    cum = np.cumsum([mix.update, mix.extract, mix.delete]) / total
    kinds, offsets, counts, values, pris = _generate(
        int(n_ops), int(d), int(seed), cum, mix.decrease, mix.delete_live, int(mix.priority_range)
    )
    return Trace(kinds, offsets, counts, values, pris)
