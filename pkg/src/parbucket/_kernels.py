"""Compiled kernels for the leveled bucket heap.

All heap state lives in one int64 matrix ``S`` (rows below, one column per
level).  Level buffers are numpy arrays owned by the Python wrapper; ``S``
holds their data addresses and capacities and kernels view them through
``carray``.  Keeping one argument and no refcounted containers makes kernel
calls cheap.

A kernel that needs a bigger buffer stops before mutating anything, records
``(slot, level, size)`` in the GROW rows of the level it was resolving and
returns ``GROW``; the caller reallocates and calls again.

A resolve of level ``i`` touches only buffers and columns of levels ``i`` and
``i+1``, so resolves on non-adjacent levels may run concurrently in different
threads.  All kernels release the GIL.
"""

import numpy as np
from numba import carray, njit
from numba.core import types
from numba.extending import intrinsic

from .primitives import DEL, key_le, key_lt, select_inplace

INF = np.iinfo(np.int64).max
MAX_PRIORITY = INF - 1
MAXLV = 40
NCOL = MAXLV + 1

# buffer slots of a level: bucket, signal, two scratch pairs
NA = 8
BV, BP, SV, SP, TV, TP, QV, QP = range(NA)

# rows of S
R_META = 0
R_NB = 1
R_NS = 2
R_SPP = 3
R_SPV = 4
R_SCHED = 5
R_RES = 6
R_TOUCH = 7
R_LIVE = 8
R_PRE = 9
R_POST = 10
R_GSLOT = 11
R_GNEED = 12
R_PTR = 13
R_CAP = R_PTR + NA
NROW = R_CAP + NA

# meta columns
M_D = 0
M_NLEV = 1
M_DEBUG = 2
M_RECORD = 3
M_NEV = 4
M_OPS = 5
M_PENDING = 6
M_EVPTR = 7
M_EVCAP = 8

# kernel status codes
OK = 0
EMPTY = 1
INVARIANT = 2
BAD_BATCH = 3
S0_BUSY = 4
NEED_DEEPER = 5
BAD_PRIORITY = 6
PRECONDITION = 7
TOO_DEEP = 8
GROW = 9

# column of R_PRE used for extract-min precondition failures
EXTRACT_SLOT = MAXLV

# trace op kinds
OP_UPDATE = 0
OP_BULK = 1
OP_EXTRACT = 2
OP_DELETE = 3


@intrinsic
def _as_ptr(typingctx, addr):
    sig = types.CPointer(types.int64)(types.int64)

    def codegen(context, builder, signature, args):
        return builder.inttoptr(args[0], context.get_value_type(types.CPointer(types.int64)))

    return sig, codegen


@njit(inline="always")
def buf(S, slot, i):
    return carray(_as_ptr(S[R_PTR + slot, i]), S[R_CAP + slot, i])


@njit(inline="always")
def _want(S, i, slot, j, need):
    """Record a grow request for buffer (slot, j) on behalf of level i."""
    if S[R_CAP + slot, j] >= need:
        return False
    S[R_GSLOT, i] = slot * NCOL + j
    S[R_GNEED, i] = need
    return True


# ---------------------------------------------------------------- resolve


@njit(nogil=True, cache=True)
def merge_dedup(av, ap, na, bv, bp, nb, ov, op):
    """Merge two value-sorted, value-unique runs into (ov, op), one survivor per value.

    The smaller priority survives, so a DEL wins and removes its live match.
    Returns (length, live elements removed).
    """
    i = 0
    j = 0
    k = 0
    removed = 0
    while i < na and j < nb:
        if av[i] < bv[j]:
            ov[k] = av[i]
            op[k] = ap[i]
            i += 1
        elif bv[j] < av[i]:
            ov[k] = bv[j]
            op[k] = bp[j]
            j += 1
        else:
            pa = ap[i]
            pb = bp[j]
            ov[k] = av[i]
            op[k] = pa if pa <= pb else pb
            if pa != DEL or pb != DEL:
                removed += 1
            i += 1
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
    return k, removed


@njit(nogil=True, cache=True)
def check_resolve_pre(S, i):
    """Resolve(i) preconditions; "i < deepest" is read as a finite splitter."""
    d = S[R_META, M_D]
    cap_s = d << (2 * i)
    ok = True
    if S[R_SPP, i] != INF and S[R_NB, i] < cap_s:
        ok = False
    if S[R_NS, i] > cap_s:
        ok = False
    if i + 1 < S[R_META, M_NLEV]:
        cap_s1 = d << (2 * (i + 1))
        if S[R_SPP, i + 1] != INF and S[R_NB, i + 1] < cap_s1 + cap_s:
            ok = False
        if S[R_NS, i + 1] > cap_s1 - cap_s:
            ok = False
    return ok


@njit(nogil=True, cache=True)
def _reserve(S, i, cap_b):
    """Check every buffer Resolve(i) may write; False after recording a grow request."""
    j = i + 1
    m = S[R_NB, i] + S[R_NS, i]
    ns1 = S[R_NS, j]
    nb1 = S[R_NB, j]
    t_need = max(m + ns1, nb1 + ns1 + m)
    q_need = max(m, cap_b)
    if _want(S, i, BV, i, cap_b) or _want(S, i, BP, i, cap_b):
        return False
    if _want(S, i, TV, i, t_need) or _want(S, i, TP, i, t_need):
        return False
    if _want(S, i, QV, i, q_need) or _want(S, i, QP, i, q_need):
        return False
    if _want(S, i, SV, j, ns1 + m) or _want(S, i, SP, j, ns1 + m):
        return False
    return True


@njit(nogil=True, cache=True)
def _empty_signal(S, i, cap_b):
    """Merge S_i into B_i, keep the cap_b smallest, send the rest to S_{i+1}.

    Returns (live removed, touches).
    """
    j = i + 1
    bv = buf(S, BV, i)
    bp = buf(S, BP, i)
    tv = buf(S, TV, i)
    tp = buf(S, TP, i)
    qv = buf(S, QV, i)
    qp = buf(S, QP, i)
    m, removed = merge_dedup(buf(S, SV, i), buf(S, SP, i), S[R_NS, i], bv, bp, S[R_NB, i], tv, tp)
    S[R_NS, i] = 0
    touches = 2 * m
    was_deepest = S[R_SPP, i] == INF
    sp = S[R_SPP, i]
    sv = S[R_SPV, i]
    num = 0
    for t in range(m):
        if tp[t] != DEL and key_le(tp[t], tv[t], sp, sv):
            num += 1
    touches += m
    if num > cap_b:
        c = 0
        for t in range(m):
            if tp[t] != DEL and key_le(tp[t], tv[t], sp, sv):
                qv[c] = tv[t]
                qp[c] = tp[t]
                c += 1
        sp, sv = select_inplace(qv, qp, c, cap_b)
        S[R_SPP, i] = sp
        S[R_SPV, i] = sv
        touches += 3 * c
    # partition: low into B_i, high into the q scratch
    a = 0
    h = 0
    for t in range(m):
        if tp[t] != DEL and key_le(tp[t], tv[t], sp, sv):
            bv[a] = tv[t]
            bp[a] = tp[t]
            a += 1
        elif tp[t] != DEL or not was_deepest:
            # at the deepest level a spent DEL has nothing left to meet
            qv[h] = tv[t]
            qp[h] = tp[t]
            h += 1
    S[R_NB, i] = a
    touches += m
    if h == 0:
        return removed, touches
    if was_deepest:
        if j >= S[R_META, M_NLEV]:
            S[R_META, M_NLEV] = j + 1
        S[R_SPP, j] = INF
        S[R_SPV, j] = INF
    k, r = merge_dedup(qv, qp, h, buf(S, SV, j), buf(S, SP, j), S[R_NS, j], tv, tp)
    s1v = buf(S, SV, j)
    s1p = buf(S, SP, j)
    s1v[:k] = tv[:k]
    s1p[:k] = tp[:k]
    S[R_NS, j] = k
    touches += 3 * k
    return removed + r, touches


@njit(nogil=True, cache=True)
def _fill(S, i, cap_b):
    """Pull the smallest eligible elements of level i+1 up into B_i.

    A value is eligible when it has no pending DEL in S_{i+1} and no copy in
    B_i; ineligible copies stay where they are and die on a later resolve.
    Returns (live removed, touches).
    """
    j = i + 1
    bv = buf(S, BV, i)
    bp = buf(S, BP, i)
    nb = S[R_NB, i]
    b1v = buf(S, BV, j)
    b1p = buf(S, BP, j)
    s1v = buf(S, SV, j)
    s1p = buf(S, SP, j)
    nb1 = S[R_NB, j]
    ns1 = S[R_NS, j]
    p1 = S[R_SPP, j]
    v1 = S[R_SPV, j]
    tv = buf(S, TV, i)
    tp = buf(S, TP, i)
    qv = buf(S, QV, i)
    qp = buf(S, QP, i)

    # pass 1: collect candidate keys
    ncand = 0
    x = 0
    y = 0
    z = 0
    while x < nb1 or y < ns1:
        if y >= ns1 or (x < nb1 and b1v[x] < s1v[y]):
            val = b1v[x]
            pb = b1p[x]
            ps = INF
            x += 1
        elif x >= nb1 or s1v[y] < b1v[x]:
            val = s1v[y]
            pb = INF
            ps = s1p[y]
            y += 1
        else:
            val = b1v[x]
            pb = b1p[x]
            ps = s1p[y]
            x += 1
            y += 1
        if ps == DEL:
            continue
        while z < nb and bv[z] < val:
            z += 1
        if z < nb and bv[z] == val:
            continue
        best = pb if pb <= ps else ps
        if key_le(best, val, p1, v1):
            tv[ncand] = val
            tp[ncand] = best
            ncand += 1
    touches = nb1 + ns1 + nb
    need = cap_b - nb
    if ncand <= need:
        sp = p1
        sv = v1
    else:
        sp, sv = select_inplace(tv, tp, ncand, need)
        touches += 2 * ncand
    S[R_SPP, i] = sp
    S[R_SPV, i] = sv
    exhausted = sp == INF

    # pass 2: move pulled elements to the q scratch, compact level i+1
    c = 0
    wb = 0
    ws = 0
    removed = 0
    x = 0
    y = 0
    z = 0
    while x < nb1 or y < ns1:
        xi = -1
        yi = -1
        if y >= ns1 or (x < nb1 and b1v[x] < s1v[y]):
            xi = x
            x += 1
        elif x >= nb1 or s1v[y] < b1v[x]:
            yi = y
            y += 1
        else:
            xi = x
            yi = y
            x += 1
            y += 1
        val = b1v[xi] if xi >= 0 else s1v[yi]
        pb = b1p[xi] if xi >= 0 else INF
        ps = s1p[yi] if yi >= 0 else INF
        pulled = -1
        if ps != DEL:
            while z < nb and bv[z] < val:
                z += 1
            if not (z < nb and bv[z] == val):
                best = pb if pb <= ps else ps
                if key_le(best, val, sp, sv):
                    qv[c] = val
                    qp[c] = best
                    c += 1
                    pulled = 0 if pb <= ps else 1
        if xi >= 0 and pulled != 0:
            if exhausted:
                removed += 1
            else:
                b1v[wb] = val
                b1p[wb] = pb
                wb += 1
        if yi >= 0 and pulled != 1:
            if exhausted:
                if ps != DEL:
                    removed += 1
            else:
                s1v[ws] = val
                s1p[ws] = ps
                ws += 1
    S[R_NB, j] = wb
    S[R_NS, j] = ws
    touches += 2 * (nb1 + ns1) + nb

    # merge the pulled run into B_i from the back; values are disjoint
    a = nb - 1
    b = c - 1
    w = nb + c - 1
    while b >= 0:
        if a >= 0 and bv[a] > qv[b]:
            bv[w] = bv[a]
            bp[w] = bp[a]
            a -= 1
        else:
            bv[w] = qv[b]
            bp[w] = qp[b]
            b -= 1
        w -= 1
    S[R_NB, i] = nb + c
    touches += nb + c
    return removed, touches


@njit(nogil=True, cache=True)
def resolve_level(S, i):
    """Resolve(i): empty S_i, then fill B_i from level i+1.  Returns a status."""
    d = S[R_META, M_D]
    if i >= S[R_META, M_NLEV]:
        S[R_RES, i] += 1
        return OK
    if i + 1 >= MAXLV:
        return TOO_DEEP
    cap_b = 2 * (d << (2 * i))
    if not _reserve(S, i, cap_b):
        return GROW
    S[R_GNEED, i] = 0
    S[R_RES, i] += 1
    status = OK
    if S[R_META, M_DEBUG] == 1 and not check_resolve_pre(S, i):
        S[R_PRE, i] += 1
        status = PRECONDITION
    touches = 0
    removed = 0
    if S[R_NS, i] > 0:
        removed, touches = _empty_signal(S, i, cap_b)
    if S[R_NB, i] < cap_b and S[R_SPP, i] != INF:
        r, t = _fill(S, i, cap_b)
        removed += r
        touches += t
    S[R_TOUCH, i] += touches
    S[R_LIVE, i] -= removed
    if S[R_META, M_DEBUG] == 1 and S[R_SPP, i] != INF and S[R_NB, i] != cap_b:
        S[R_POST, i] += 1
    if S[R_META, M_RECORD] != 0:
        e = S[R_META, M_NEV]
        if e < S[R_META, M_EVCAP]:
            ev = carray(_as_ptr(S[R_META, M_EVPTR]), 3 * S[R_META, M_EVCAP])
            ev[3 * e] = i
            ev[3 * e + 1] = S[R_RES, i]
            ev[3 * e + 2] = touches
            S[R_META, M_NEV] = e + 1
    return status


# ---------------------------------------------------------------- level-0 ops
# S_0 and B_0 are allocated at full capacity, so operations never grow buffers.


@njit(inline="always")
def _signal0(S, value, priority):
    buf(S, SV, 0)[0] = value
    buf(S, SP, 0)[0] = priority
    S[R_NS, 0] = 1
    S[R_META, M_OPS] += 1
    S[R_META, M_PENDING] = 1


@njit(nogil=True, cache=True)
def op_update(S, value, priority):
    if S[R_META, M_PENDING] != 0 or S[R_NS, 0] != 0:
        return S0_BUSY
    if priority < 0 or priority > MAX_PRIORITY or value < 0:
        return BAD_PRIORITY
    _signal0(S, value, priority)
    S[R_LIVE, 0] += 1
    return OK


@njit(nogil=True, cache=True)
def op_delete(S, value):
    if S[R_META, M_PENDING] != 0 or S[R_NS, 0] != 0:
        return S0_BUSY
    if value < 0:
        return BAD_PRIORITY
    _signal0(S, value, DEL)
    return OK


@njit(nogil=True, cache=True)
def op_bulk(S, vals, pris):
    if S[R_META, M_PENDING] != 0 or S[R_NS, 0] != 0:
        return S0_BUSY
    n = vals.shape[0]
    if n > S[R_META, M_D]:
        return BAD_BATCH
    for t in range(n):
        if pris[t] < 0 or pris[t] > MAX_PRIORITY or vals[t] < 0:
            return BAD_PRIORITY
        if t > 0 and vals[t] <= vals[t - 1]:
            return BAD_BATCH
    sv = buf(S, SV, 0)
    sp = buf(S, SP, 0)
    for t in range(n):
        sv[t] = vals[t]
        sp[t] = pris[t]
    S[R_NS, 0] = n
    S[R_LIVE, 0] += n
    S[R_META, M_OPS] += 1
    S[R_META, M_PENDING] = 1
    return OK


@njit(nogil=True, cache=True)
def find_min_index(S):
    n = S[R_NB, 0]
    if n == 0:
        return -1
    bv = buf(S, BV, 0)
    bp = buf(S, BP, 0)
    best = 0
    for t in range(1, n):
        if key_lt(bp[t], bv[t], bp[best], bv[best]):
            best = t
    S[R_TOUCH, 0] += n
    return best


@njit(nogil=True, cache=True)
def op_extract(S):
    """Returns (status, value, priority)."""
    if S[R_META, M_PENDING] != 0 or S[R_NS, 0] != 0:
        return S0_BUSY, -1, -1
    n = S[R_NB, 0]
    deeper = S[R_SPP, 0] != INF
    if S[R_META, M_DEBUG] == 1 and deeper and n < S[R_META, M_D]:
        S[R_PRE, EXTRACT_SLOT] += 1
    if n == 0:
        if deeper:
            return INVARIANT, -1, -1
        return EMPTY, -1, -1
    best = find_min_index(S)
    bv = buf(S, BV, 0)
    bp = buf(S, BP, 0)
    v = bv[best]
    p = bp[best]
    for t in range(best, n - 1):
        bv[t] = bv[t + 1]
        bp[t] = bp[t + 1]
    S[R_NB, 0] = n - 1
    _signal0(S, v, DEL)
    S[R_LIVE, 0] -= 1
    return OK, v, p


# ---------------------------------------------------------------- scheduling


@njit(nogil=True, cache=True)
def level_runnable(S, i):
    """4-to-1 rule for Resolve(i), i >= 1, ignoring in-flight state."""
    nlev = S[R_META, M_NLEV]
    if i > nlev:
        return False
    if S[R_SCHED, i - 1] < 4 * (S[R_SCHED, i] + 1):
        return False
    k = S[R_SCHED, i] + 1
    if k % 4 == 1 and k > 1 and i + 1 <= nlev and S[R_SCHED, i + 1] < (k - 1) // 4:
        return False
    return True


@njit(nogil=True, cache=True)
def op_ready(S):
    """Whether the next operation (fused with Resolve(0)) may start."""
    k = S[R_SCHED, 0] + 1
    if k % 4 == 1 and k > 1 and S[R_SCHED, 1] < (k - 1) // 4:
        return False
    return True


@njit(nogil=True, cache=True)
def settle(S, limit):
    """Finish the pending Resolve(0) and every due resolve on levels [1, limit).

    Returns OK, NEED_DEEPER when Resolve(limit) is due, GROW, or an error.
    Safe to call again after GROW.
    """
    if S[R_META, M_PENDING] != 0:
        s = resolve_level(S, 0)
        if s == GROW:
            return s
        S[R_SCHED, 0] += 1
        S[R_META, M_PENDING] = 0
        if s != OK:
            return s
    while True:
        progressed = False
        top = S[R_META, M_NLEV] + 1
        if top > limit:
            top = limit
        for i in range(1, top):
            if level_runnable(S, i):
                s = resolve_level(S, i)
                if s == GROW:
                    return s
                S[R_SCHED, i] += 1
                if s != OK:
                    return s
                progressed = True
                break
        if not progressed:
            break
    if limit <= S[R_META, M_NLEV] and level_runnable(S, limit):
        return NEED_DEEPER
    return OK


@njit(nogil=True, cache=True)
def run_resolve(S, i):
    """Scheduled Resolve(i) as run by a level worker."""
    s = resolve_level(S, i)
    if s != GROW:
        S[R_SCHED, i] += 1
    return s


@njit(nogil=True, cache=True)
def run_ops(S, kind, off, cnt, ev, ep, pos, stop, outv, outp, outn, limit):
    """Replay trace ops [pos, stop) with all resolves below ``limit`` inline.

    Returns (pos, outn, status).  ``pos`` is the next op to apply; after an
    operation error it is the offending op.  Resumable after GROW and
    NEED_DEEPER.
    """
    while True:
        s = settle(S, limit)
        if s != OK:
            return pos, outn, s
        if pos >= stop:
            return pos, outn, OK
        if not op_ready(S):
            return pos, outn, NEED_DEEPER
        k = kind[pos]
        o = off[pos]
        if k == OP_UPDATE:
            s = op_update(S, ev[o], ep[o])
        elif k == OP_BULK:
            s = op_bulk(S, ev[o:o + cnt[pos]], ep[o:o + cnt[pos]])
        elif k == OP_DELETE:
            s = op_delete(S, ev[o])
        else:
            s, v, p = op_extract(S)
            if s == OK:
                outv[outn] = v
                outp[outn] = p
                outn += 1
        if s != OK:
            return pos, outn, s
        pos += 1


@njit(nogil=True, cache=True)
def drain(S):
    """Top-down resolve passes until every signal buffer is empty.

    Drain runs outside the 4-to-1 schedule, so precondition checks are
    suspended while it works.  Resumable after GROW.
    """
    debug = S[R_META, M_DEBUG]
    S[R_META, M_DEBUG] = 0
    S[R_META, M_PENDING] = 0
    status = OK
    while status == OK:
        i = 0
        while i < S[R_META, M_NLEV] and status == OK:
            status = resolve_level(S, i)
            i += 1
        busy = False
        for j in range(S[R_META, M_NLEV]):
            if S[R_NS, j] != 0:
                busy = True
        if not busy:
            break
    S[R_META, M_DEBUG] = debug
    if status == OK:
        for j in range(NCOL):
            S[R_SCHED, j] = 0
    return status
