"""Numba kernels: closed grid cells of the unit lattice met by simplices.

Coordinates arrive already rescaled so that every cell is ``[c, c+1]`` on
each axis (axis 0 is time).  The cells met by a simplex are found slab by
slab: the part of a convex set inside a slab ``a <= u_axis <= b`` is the
convex hull of the points inside the slab together with every pairwise
segment crossing of the two slab planes, so clipping never needs an explicit
face structure.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _clip(P, npts, axis, a, b, tol, out):
    d = P.shape[1]
    m = 0
    for i in range(npts):
        v = P[i, axis]
        if v >= a - tol and v <= b + tol:
            for k in range(d):
                out[m, k] = P[i, k]
            m += 1
    for i in range(npts):
        pi = P[i, axis]
        for j in range(i + 1, npts):
            pj = P[j, axis]
            if pi == pj:
                continue
            for side in range(2):
                c = a if side == 0 else b
                if (pi - c) * (pj - c) < 0.0:
                    s = (c - pi) / (pj - pi)
                    for k in range(d):
                        out[m, k] = P[i, k] + s * (P[j, k] - P[i, k])
                    out[m, axis] = c
                    m += 1
    return m


@nb.njit(cache=True)
def _range_in_slab(P, npts, axis, val, a, b, tol):
    """Extent of coordinate ``val`` over hull(P) restricted to the slab."""
    lo = np.inf
    hi = -np.inf
    for i in range(npts):
        v = P[i, axis]
        if v >= a - tol and v <= b + tol:
            y = P[i, val]
            lo = min(lo, y)
            hi = max(hi, y)
    for i in range(npts):
        pi = P[i, axis]
        for j in range(i + 1, npts):
            pj = P[j, axis]
            if pi == pj:
                continue
            for side in range(2):
                c = a if side == 0 else b
                if (pi - c) * (pj - c) < 0.0:
                    s = (c - pi) / (pj - pi)
                    y = P[i, val] + s * (P[j, val] - P[i, val])
                    lo = min(lo, y)
                    hi = max(hi, y)
    return lo, hi


@nb.njit(cache=True)
def _hull2d(P, npts, c0, c1, out, idx, H):
    """Monotone-chain convex hull of columns (c0, c1) of P; vertices go to ``out``.

    ``idx`` and ``H`` are scratch buffers of length >= npts and 2*npts+1.
    """
    if npts == 0:
        return 0
    for i in range(npts):
        idx[i] = i
    # insertion sort, lexicographic
    for i in range(1, npts):
        k = idx[i]
        j = i - 1
        while j >= 0 and (P[idx[j], c0] > P[k, c0] or
                          (P[idx[j], c0] == P[k, c0] and P[idx[j], c1] > P[k, c1])):
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = k
    h = 0
    for ii in range(npts):
        i = idx[ii]
        x = P[i, c0]
        y = P[i, c1]
        while h >= 2 and ((H[h - 1, 0] - H[h - 2, 0]) * (y - H[h - 2, 1])
                          - (H[h - 1, 1] - H[h - 2, 1]) * (x - H[h - 2, 0])) <= 0.0:
            h -= 1
        H[h, 0] = x
        H[h, 1] = y
        h += 1
    lower = h + 1
    for ii in range(npts - 2, -1, -1):
        i = idx[ii]
        x = P[i, c0]
        y = P[i, c1]
        while h >= lower and ((H[h - 1, 0] - H[h - 2, 0]) * (y - H[h - 2, 1])
                              - (H[h - 1, 1] - H[h - 2, 1]) * (x - H[h - 2, 0])) <= 0.0:
            h -= 1
        H[h, 0] = x
        H[h, 1] = y
        h += 1
    if h > 1:
        h -= 1
    for i in range(h):
        out[i, 0] = H[i, 0]
        out[i, 1] = H[i, 1]
    return h


@nb.njit(cache=True)
def _first_cell(lo, tol):
    return int(math.ceil(lo - tol)) - 1


@nb.njit(cache=True)
def _last_cell(hi, tol):
    return int(math.floor(hi + tol))


@nb.njit(cache=True)
def grid_hits(U, w, active, c0_lo, c0_hi, tol, base, strides, keys, wts):
    """Keys of closed unit cells met by the simplices ``U[active]``.

    Only time layers ``c0_lo <= c0 < c0_hi`` are visited.  Hits (cell key and
    simplex weight, one per simplex-cell pair) are written to ``keys`` and
    ``wts``; the return value is the number of hits, or -1 if the buffers
    overflowed.
    """
    S, m, d = U.shape
    n = d - 1
    cap = keys.shape[0]
    cnt = 0
    tbuf = np.empty((m * m + m, d))
    hull = np.empty((2 * (m * m + m) + 2, 2))
    xbuf = np.empty(((m * m + m) ** 2 + m * m + m, d))
    hull2 = np.empty((2 * xbuf.shape[0] + 2, 2))
    pts2 = np.empty((xbuf.shape[0], 2))
    idx = np.empty(xbuf.shape[0], np.int64)
    H = np.empty((2 * xbuf.shape[0] + 1, 2))
    for ai in range(active.shape[0]):
        s = active[ai]
        P = U[s]
        tmin = np.inf
        tmax = -np.inf
        for v in range(m):
            tmin = min(tmin, P[v, 0])
            tmax = max(tmax, P[v, 0])
        a0 = max(_first_cell(tmin, tol), c0_lo)
        b0 = min(_last_cell(tmax, tol), c0_hi - 1)
        for c0 in range(a0, b0 + 1):
            npt = _clip(P, m, 0, c0, c0 + 1.0, tol, tbuf)
            if npt == 0:
                continue
            k0 = (c0 - base[0]) * strides[0]
            if n == 0:
                if cnt >= cap:
                    return -1
                keys[cnt] = k0
                wts[cnt] = w[s]
                cnt += 1
            elif n == 1:
                lo = np.inf
                hi = -np.inf
                for i in range(npt):
                    lo = min(lo, tbuf[i, 1])
                    hi = max(hi, tbuf[i, 1])
                for c1 in range(_first_cell(lo, tol), _last_cell(hi, tol) + 1):
                    if cnt >= cap:
                        return -1
                    keys[cnt] = k0 + (c1 - base[1]) * strides[1]
                    wts[cnt] = w[s]
                    cnt += 1
            elif n == 2:
                h = _hull2d(tbuf, npt, 1, 2, hull, idx, H)
                lo = np.inf
                hi = -np.inf
                for i in range(h):
                    lo = min(lo, hull[i, 0])
                    hi = max(hi, hull[i, 0])
                for c1 in range(_first_cell(lo, tol), _last_cell(hi, tol) + 1):
                    ylo, yhi = _range_in_slab(hull, h, 0, 1, c1, c1 + 1.0, tol)
                    if ylo > yhi:
                        continue
                    k1 = k0 + (c1 - base[1]) * strides[1]
                    for c2 in range(_first_cell(ylo, tol), _last_cell(yhi, tol) + 1):
                        if cnt >= cap:
                            return -1
                        keys[cnt] = k1 + (c2 - base[2]) * strides[2]
                        wts[cnt] = w[s]
                        cnt += 1
            else:
                lo = np.inf
                hi = -np.inf
                for i in range(npt):
                    lo = min(lo, tbuf[i, 1])
                    hi = max(hi, tbuf[i, 1])
                for c1 in range(_first_cell(lo, tol), _last_cell(hi, tol) + 1):
                    nx = _clip(tbuf, npt, 1, c1, c1 + 1.0, tol, xbuf)
                    if nx == 0:
                        continue
                    for i in range(nx):
                        pts2[i, 0] = xbuf[i, 2]
                        pts2[i, 1] = xbuf[i, 3]
                    h = _hull2d(pts2, nx, 0, 1, hull2, idx, H)
                    ylo = np.inf
                    yhi = -np.inf
                    for i in range(h):
                        ylo = min(ylo, hull2[i, 0])
                        yhi = max(yhi, hull2[i, 0])
                    k1 = k0 + (c1 - base[1]) * strides[1]
                    for c2 in range(_first_cell(ylo, tol), _last_cell(yhi, tol) + 1):
                        zlo, zhi = _range_in_slab(hull2, h, 0, 1, c2, c2 + 1.0, tol)
                        if zlo > zhi:
                            continue
                        k2 = k1 + (c2 - base[2]) * strides[2]
                        for c3 in range(_first_cell(zlo, tol), _last_cell(zhi, tol) + 1):
                            if cnt >= cap:
                                return -1
                            keys[cnt] = k2 + (c3 - base[3]) * strides[3]
                            wts[cnt] = w[s]
                            cnt += 1
    return cnt
