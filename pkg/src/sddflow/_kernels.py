"""Compiled inner loops over the flattened path-sum state.

State layout: ``x[2*i]`` is the pushed-through flow (d_ext) of decomposition
node ``i`` and ``x[2*i + 1]`` its separator potential drop (d_drop). Vertex
``a`` owns rows ``ptr[a]:ptr[a+1]`` of ``mem``; each row is
``(4*node + kind, height)`` stored as floats so one vertex's memberships sit
in one contiguous block. All values here are raw root-to-vertex sums; callers
negate for voltages.

Off-tree edges are packed two per cache line: ``rec[k] = (r, R, flow, spans)``
where ``spans`` holds the int64 bits of ``span(a) << 32 | span(b)`` and
``span(v) = 64*ptr[v] + count``. It is read through an int64 view so the hot
loop never touches ``ptr``.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

KIND_T0 = 0
KIND_PLUS = 1
KIND_BASE = 2
REC_WIDTH = 4
LOW32 = (1 << 32) - 1
MAX_COUNT = 64


def pack_memberships(node, kind, height) -> np.ndarray:
    mem = np.empty((len(node), 2))
    mem[:, 0] = 4 * np.asarray(node, dtype=np.int64) + np.asarray(kind, dtype=np.int64)
    mem[:, 1] = height
    return mem


def aligned_rows(k: int, width: int = REC_WIDTH) -> np.ndarray:
    """Zeroed ``(k, width)`` float array starting on a 64-byte boundary."""
    buf = np.zeros(k * width + 8)
    off = (-buf.ctypes.data % 64) // 8
    return buf[off:off + k * width].reshape(k, width)


def pack_spans(ptr, a, b) -> np.ndarray:
    """int64 ``span(a) << 32 | span(b)`` with ``span(v) = 64*ptr[v] + count``."""
    ptr = np.asarray(ptr, dtype=np.int64)
    if ptr[-1] * MAX_COUNT > LOW32 or np.diff(ptr).max(initial=0) >= MAX_COUNT:
        raise OverflowError("membership table too large for packed spans")
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    sa = ptr[a] * MAX_COUNT + (ptr[a + 1] - ptr[a])
    sb = ptr[b] * MAX_COUNT + (ptr[b + 1] - ptr[b])
    return (sa << 32) | sb


@njit(cache=True)
def query_block(lo, hi, mem, x):
    s = 0.0
    for j in range(lo, hi):
        code = int(mem[j, 0])
        i = code >> 2
        if (code & 3) == KIND_T0:
            s += mem[j, 1] * x[2 * i]
        else:
            s += x[2 * i + 1]
    return s


@njit(cache=True)
def update_block(lo, hi, mem, x, alpha):
    for j in range(lo, hi):
        code = int(mem[j, 0])
        i = code >> 2
        x[2 * i + 1] += alpha * mem[j, 1]
        if (code & 3) == KIND_PLUS:
            x[2 * i] += alpha


@njit(cache=True)
def query_raw(ptr, mem, x, a):
    return query_block(ptr[a], ptr[a + 1], mem, x)


@njit(cache=True)
def update_raw(ptr, mem, x, a, alpha):
    update_block(ptr[a], ptr[a + 1], mem, x, alpha)


@njit(cache=True)
def query_all_raw(ptr, mem, x, n):
    out = np.empty(n)
    for a in range(n):
        out[a] = query_raw(ptr, mem, x, a)
    return out


@njit(cache=True)
def _unpack(packed):
    sa = packed >> 32
    sb = packed & LOW32
    la = sa >> 6
    lb = sb >> 6
    return la, la + (sa & 63), lb, lb + (sb & 63)


@njit(cache=True)
def cycle_update_one(mem, x, rec, spans, k):
    """Zero the cycle potential of off-tree slot ``k``; returns the potential removed."""
    la, ha, lb, hb = _unpack(spans[k, 3])
    delta = rec[k, 2] * rec[k, 0] + query_block(la, ha, mem, x) - query_block(lb, hb, mem, x)
    alpha = delta / rec[k, 1]
    rec[k, 2] -= alpha
    update_block(lb, hb, mem, x, alpha)
    update_block(la, ha, mem, x, -alpha)
    return delta


@njit(cache=True)
def alias_sample(prob, alias, uniforms):
    """One draw per uniform: integer part picks a column, fraction picks column or alias."""
    count = prob.shape[0]
    out = np.empty(uniforms.shape[0], dtype=np.int64)
    for t in range(uniforms.shape[0]):
        scaled = uniforms[t] * count
        k = int(scaled)
        if k >= count:
            k = count - 1
        if scaled - k >= prob[k]:
            k = alias[k]
        out[t] = k
    return out


@njit(cache=True)
def run_cycle_updates(mem, x, rec, spans, picks, rel_tol):
    """Apply the cycle update of every slot in ``picks``, in order.

    ``spans`` is the int64 view of ``rec``. Returns the number of updates
    whose cycle potential exceeded ``rel_tol`` relative to the magnitudes it
    was formed from.
    """
    effective = 0
    for t in range(picks.shape[0]):
        k = picks[t]
        la, ha, lb, hb = _unpack(spans[k, 3])
        qa = query_block(la, ha, mem, x)
        qb = query_block(lb, hb, mem, x)
        local = rec[k, 2] * rec[k, 0]
        delta = local + qa - qb
        if abs(delta) > rel_tol * (abs(local) + abs(qa) + abs(qb)):
            effective += 1
        alpha = delta / rec[k, 1]
        rec[k, 2] -= alpha
        update_block(lb, hb, mem, x, alpha)
        update_block(la, ha, mem, x, -alpha)
    return effective
