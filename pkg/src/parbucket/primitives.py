"""Sorted-array primitives behind Resolve(i), compiled with numba.

Sequences are parallel int64 arrays of values and priorities.  Keys compare
as ``(priority, value)``; ``DEL`` (-1) marks a delete signal.
"""

import numpy as np
from numba import njit

DEL = -1


@njit(inline="always")
def key_le(p1, v1, p2, v2):
    return p1 < p2 or (p1 == p2 and v1 <= v2)


@njit(inline="always")
def key_lt(p1, v1, p2, v2):
    return p1 < p2 or (p1 == p2 and v1 < v2)


@njit(nogil=True, cache=True)
def _trim(a, k):
    out = np.empty(k, np.int64)
    for i in range(k):
        out[i] = a[i]
    return out


@njit(nogil=True, cache=True)
def merge_by_value(av, ap, bv, bp):
    na = av.shape[0]
    nb = bv.shape[0]
    ov = np.empty(na + nb, np.int64)
    op = np.empty(na + nb, np.int64)
    i = 0
    j = 0
    k = 0
    while i < na and j < nb:
        # DEL == -1 sorts first among equal values
        if av[i] < bv[j] or (av[i] == bv[j] and ap[i] <= bp[j]):
            ov[k] = av[i]
            op[k] = ap[i]
            i += 1
        else:
            ov[k] = bv[j]
            op[k] = bp[j]
            j += 1
        k += 1
    while i < na:
        ov[k] = av[i]
        op[k] = ap[i]
        i += 1
        k += 1
    while j < nb:
        ov[k] = bv[j]
        op[k] = bp[j]
        j += 1
        k += 1
    return ov, op


@njit(nogil=True, cache=True)
def delete_duplicates(v, p, keep_signal):
    """One survivor per value; returns (values, priorities, live_removed).

    A DEL in a value group removes every live element of that group.  With
    ``keep_signal`` the DEL itself survives so it can reach older copies further
    down; without it the DEL is consumed by a match.  Otherwise the minimum
    priority survives.
    """
    n = v.shape[0]
    ov = np.empty(n, np.int64)
    op = np.empty(n, np.int64)
    k = 0
    removed = 0
    i = 0
    while i < n:
        j = i
        best = p[i]
        nlive = 0
        while j < n and v[j] == v[i]:
            if p[j] < best:
                best = p[j]
            if p[j] != DEL:
                nlive += 1
            j += 1
        if best != DEL or keep_signal or nlive == 0:
            ov[k] = v[i]
            op[k] = best
            k += 1
        if best == DEL:
            removed += nlive
        else:
            removed += nlive - 1
        i = j
    return _trim(ov, k), _trim(op, k), removed


@njit(nogil=True, cache=True)
def select_inplace(wv, wp, n, k):
    """k-th smallest (priority, value) key among the first n entries, 1-based.

    Seeded quickselect; permutes the first n entries.
    """
    lo = 0
    hi = n - 1
    target = k - 1
    state = np.int64(n) * 2654435761 + np.int64(k) * 40503 + 12345
    while lo < hi:
        state = state * 6364136223846793005 + 1442695040888963407
        r = lo + ((state >> 33) & 0x7FFFFFFF) % (hi - lo + 1)
        pp = wp[r]
        pv = wv[r]
        lt = lo
        gt = hi
        idx = lo
        while idx <= gt:
            if key_lt(wp[idx], wv[idx], pp, pv):
                wp[lt], wp[idx] = wp[idx], wp[lt]
                wv[lt], wv[idx] = wv[idx], wv[lt]
                lt += 1
                idx += 1
            elif key_lt(pp, pv, wp[idx], wv[idx]):
                wp[gt], wp[idx] = wp[idx], wp[gt]
                wv[gt], wv[idx] = wv[idx], wv[gt]
                gt -= 1
            else:
                idx += 1
        if target < lt:
            hi = lt - 1
        elif target > gt:
            lo = gt + 1
        else:
            return pp, pv
    return wp[lo], wv[lo]


@njit(nogil=True, cache=True)
def select_kth(v, p, k):
    """k-th smallest (priority, value) key, 1-based; the inputs are left untouched."""
    return select_inplace(v.copy(), p.copy(), v.shape[0], k)


@njit(nogil=True, cache=True)
def partition_by_splitter(v, p, sp, sv):
    n = v.shape[0]
    lv = np.empty(n, np.int64)
    lp = np.empty(n, np.int64)
    hv = np.empty(n, np.int64)
    hp = np.empty(n, np.int64)
    a = 0
    b = 0
    for i in range(n):
        if p[i] != DEL and key_le(p[i], v[i], sp, sv):
            lv[a] = v[i]
            lp[a] = p[i]
            a += 1
        else:
            hv[b] = v[i]
            hp[b] = p[i]
            b += 1
    return _trim(lv, a), _trim(lp, a), _trim(hv, b), _trim(hp, b)


