"""Compiled grid kernels for box counting and neighborhood area.

Box counting works in cell units ``u = (x - ox) / eps``, ``v = (y - oy) / eps``
(computed inside the kernel), so cell ``(i, j)`` is the closed square
``[i, i+1] x [j, j+1]``.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _closed_range(u):
    # indices of the closed unit cells containing coordinate u
    f = math.floor(u)
    if f == u:
        return int(f) - 1, int(f)
    return int(f), int(f)


@njit(cache=True, nogil=True)
def _emit_point(u, v, i0, j0, ny, bits, keys, state):
    """Register every closed cell containing (u, v).

    ``state`` holds [n_keys, last_key]; keys mode grows ``keys`` on demand and
    returns the (possibly reallocated) buffer.
    """
    ilo, ihi = _closed_range(u)
    jlo, jhi = _closed_range(v)
    for i in range(ilo, ihi + 1):
        for j in range(jlo, jhi + 1):
            idx = (i - i0) * ny + (j - j0)
            if bits.size > 0:
                bits[idx >> 6] |= np.uint64(1) << np.uint64(idx & 63)
            elif idx != state[1]:
                n = state[0]
                if n == keys.size:
                    grown = np.empty(2 * keys.size, dtype=np.int64)
                    grown[:n] = keys[:n]
                    keys = grown
                keys[n] = idx
                state[0] = n + 1
                state[1] = idx
    return keys


@njit(cache=True, nogil=True)
def walk_cells(x, y, ox, oy, eps, i0, j0, ny, bits, keys):
    """Exact closed-cell walk of the polyline (u, v).

    A segment meets exactly the closed cells that contain one of its event
    points (endpoints and grid-line crossings): between two consecutive
    events the open piece stays inside one cell, which also contains both
    events.  Returns ``(keys, n_keys)``; in bitmap mode ``keys`` is unused.
    """
    state = np.array([0, -1], dtype=np.int64)
    n = x.size
    u1 = (x[0] - ox) / eps
    v1 = (y[0] - oy) / eps
    keys = _emit_point(u1, v1, i0, j0, ny, bits, keys, state)
    for s in range(n - 1):
        u0 = u1
        v0 = v1
        u1 = (x[s + 1] - ox) / eps
        v1 = (y[s + 1] - oy) / eps
        du = u1 - u0
        dv = v1 - v0
        # next integer strictly inside (u0, u1) in travel direction
        if du > 0:
            kx = math.floor(u0) + 1.0
            sx = 1.0
        elif du < 0:
            kx = math.ceil(u0) - 1.0
            sx = -1.0
        else:
            kx = 0.0
            sx = 0.0
        if dv > 0:
            ky = math.floor(v0) + 1.0
            sy = 1.0
        elif dv < 0:
            ky = math.ceil(v0) - 1.0
            sy = -1.0
        else:
            ky = 0.0
            sy = 0.0
        while True:
            tx = (kx - u0) / du if sx != 0.0 else 2.0
            ty = (ky - v0) / dv if sy != 0.0 else 2.0
            if tx >= 1.0 and ty >= 1.0:
                break
            if tx < ty:
                keys = _emit_point(kx, v0 + tx * dv, i0, j0, ny, bits, keys, state)
                kx += sx
            elif ty < tx:
                keys = _emit_point(u0 + ty * du, ky, i0, j0, ny, bits, keys, state)
                ky += sy
            else:
                keys = _emit_point(kx, ky, i0, j0, ny, bits, keys, state)
                kx += sx
                ky += sy
        keys = _emit_point(u1, v1, i0, j0, ny, bits, keys, state)
    return keys, state[0]


@njit(cache=True, nogil=True)
def _push_interval(ci, lo, hi, buf, n):
    if n == buf.shape[0]:
        grown = np.empty((2 * buf.shape[0], 3), dtype=np.int64)
        grown[:n] = buf[:n]
        buf = grown
    buf[n, 0] = ci
    buf[n, 1] = lo
    buf[n, 2] = hi
    return buf


CACHE_SLOTS = 4096


@njit(cache=True, nogil=True)
def stadium_columns(x, y, eps, h, ox, oy, buf):
    """Column intervals of grid-cell centers strictly within ``eps`` of a segment.

    Cell (i, j) has center ``(ox + (i + 0.5) h, oy + (j + 0.5) h)``.  For each
    segment and each center column crossing its stadium, the stadium chord on
    that column is the hull of the two end-disc chords and the chord of the
    band rectangle.  Rows from consecutive segments that overlap in the same
    column are fused in a direct-mapped cache before being flushed, which keeps
    the output near the size of the union instead of the sum.  Returns
    ``(buf, n)`` with rows ``(i, j_lo, j_hi)``.
    """
    n = 0
    e2 = eps * eps
    ccol = np.zeros(CACHE_SLOTS, dtype=np.int64)
    clo = np.zeros(CACHE_SLOTS, dtype=np.int64)
    chi = np.zeros(CACHE_SLOTS, dtype=np.int64)
    cuse = np.zeros(CACHE_SLOTS, dtype=np.bool_)
    mask = CACHE_SLOTS - 1
    for s in range(x.size - 1):
        ax = x[s]
        ay = y[s]
        bx = x[s + 1]
        by = y[s + 1]
        dx = bx - ax
        dy = by - ay
        ln = math.sqrt(dx * dx + dy * dy)
        if ln > 0.0:
            nx_ = -dy / ln * eps
            ny_ = dx / ln * eps
        else:
            nx_ = 0.0
            ny_ = 0.0
        # band rectangle corners, in cyclic order
        px = (ax + nx_, bx + nx_, bx - nx_, ax - nx_)
        py = (ay + ny_, by + ny_, by - ny_, ay - ny_)
        xlo = min(ax, bx) - eps
        xhi = max(ax, bx) + eps
        i_start = math.floor((xlo - ox) / h - 0.5) + 1
        i_stop = math.ceil((xhi - ox) / h - 0.5) - 1
        for i in range(i_start, i_stop + 1):
            c = ox + (i + 0.5) * h
            lo = math.inf
            hi = -math.inf
            w2 = e2 - (c - ax) * (c - ax)
            if w2 > 0.0:
                w = math.sqrt(w2)
                lo = min(lo, ay - w)
                hi = max(hi, ay + w)
            w2 = e2 - (c - bx) * (c - bx)
            if w2 > 0.0:
                w = math.sqrt(w2)
                lo = min(lo, by - w)
                hi = max(hi, by + w)
            if ln > 0.0:
                for k in range(4):
                    qx0 = px[k]
                    qy0 = py[k]
                    qx1 = px[(k + 1) % 4]
                    qy1 = py[(k + 1) % 4]
                    if qx0 == qx1:
                        continue
                    if (qx0 - c) * (qx1 - c) <= 0.0:
                        yc = qy0 + (c - qx0) / (qx1 - qx0) * (qy1 - qy0)
                        lo = min(lo, yc)
                        hi = max(hi, yc)
            if lo >= hi:
                continue
            j_lo = math.floor((lo - oy) / h - 0.5) + 1
            j_hi = math.ceil((hi - oy) / h - 0.5) - 1
            if j_lo > j_hi:
                continue
            slot = i & mask
            if cuse[slot] and ccol[slot] == i and j_lo <= chi[slot] + 1 and j_hi >= clo[slot] - 1:
                if j_lo < clo[slot]:
                    clo[slot] = j_lo
                if j_hi > chi[slot]:
                    chi[slot] = j_hi
                continue
            if cuse[slot]:
                buf = _push_interval(ccol[slot], clo[slot], chi[slot], buf, n)
                n += 1
            cuse[slot] = True
            ccol[slot] = i
            clo[slot] = j_lo
            chi[slot] = j_hi
    for slot in range(CACHE_SLOTS):
        if cuse[slot]:
            buf = _push_interval(ccol[slot], clo[slot], chi[slot], buf, n)
            n += 1
    return buf, n


@njit(cache=True, nogil=True)
def merged_interval_cells(rows):
    """Number of cells in the union of (column, lo, hi) rows sorted by (column, lo)."""
    total = 0
    if rows.shape[0] == 0:
        return 0
    ci = rows[0, 0]
    lo = rows[0, 1]
    hi = rows[0, 2]
    for r in range(1, rows.shape[0]):
        c, a, b = rows[r, 0], rows[r, 1], rows[r, 2]
        if c == ci and a <= hi + 1:
            if b > hi:
                hi = b
        else:
            total += hi - lo + 1
            ci = c
            lo = a
            hi = b
    total += hi - lo + 1
    return total
