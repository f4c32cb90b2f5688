"""Parabolic Hausdorff content of polyhedral space-time sets by grid covers.

The grid at scale ``delta`` has time step ``delta**2`` and spatial step
``delta``.  Every closed cell met by the set contributes
``alpha(s) * (diam/2)**s`` where ``diam`` is the parabolic diameter of the cell,
weighted by the largest multiplicity among the simplices meeting it.

Two devices keep the estimator honest:

* the lattice is shifted by a fixed, generic fraction of a cell on every
  axis, so flat faces of test sets never sit exactly on cell walls; the shift
  is given in cell units, hence it scales with the grid and the estimator
  commutes exactly with parabolic dilations when the ladder is dilated too;
* in two or more space dimensions the count is averaged over a fixed set of
  spatial rotations, which removes most of the dependence on how a set is
  oriented relative to the grid axes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from ._raster import grid_hits
from .geometry import PolyhedralChain

log = logging.getLogger(__name__)

DEFAULT_LADDER = tuple(2.0**-j for j in range(3, 10))
# generic fractional shift of the lattice, time first then space axes
DEFAULT_OFFSET = (0.3819660112501051, 0.2360679774997897, 0.4142135623730951, 0.7320508075688772)
PLANE_TOL = 1e-12
CONVENTION = "alpha(s)*(diam/2)^s with alpha(s)=pi^(s/2)/Gamma(s/2+1)"

WeightFn = Callable[[np.ndarray], np.ndarray]


def alpha(s: float) -> float:
    """Volume of the unit ball in dimension ``s``, continued to real ``s``."""
    return math.pi ** (s / 2.0) / math.gamma(s / 2.0 + 1.0)


@dataclass(frozen=True)
class ParabolicBox:
    """Cell ``[t0, t0 + w**2] x prod [c_i, c_i + w]`` of a parabolic grid."""

    t0: float
    corner: tuple[float, ...]
    w: float

    @property
    def h(self) -> float:
        return self.w * self.w

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def diameter(self) -> float:
        return max(math.sqrt(self.h), self.w * math.sqrt(self.n))

    def center(self) -> np.ndarray:
        return np.array((self.t0 + self.h / 2, *(c + self.w / 2 for c in self.corner)))


@dataclass(frozen=True)
class MeasureEstimate:
    s: float
    delta_ladder: tuple[float, ...]
    values: tuple[float, ...]
    extrapolated: float
    convention: str = CONVENTION
    cells: tuple[int, ...] = field(default=())

    def __post_init__(self):
        d = np.asarray(self.delta_ladder, dtype=float)
        if len(d) == 0:
            raise ValueError("empty ladder")
        if np.any(np.diff(d) >= 0):
            raise ValueError("delta ladder must be strictly decreasing")
        if len(self.values) != len(d) or min(self.values) < 0:
            raise ValueError("values must be nonnegative, one per ladder entry")

    @property
    def finest(self) -> float:
        return self.values[-1]

    def last_change(self) -> float:
        """Relative difference of the two finest ladder values."""
        if len(self.values) < 2:
            return 0.0
        a, b = self.values[-2], self.values[-1]
        return abs(b - a) / max(abs(b), 1e-300)

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "convention": self.convention,
            "ladder": [
                {"delta": d, "value": v, **({"cells": c} if self.cells else {})}
                for d, v, c in zip(self.delta_ladder, self.values,
                                   self.cells or (None,) * len(self.values))
            ],
            "extrapolated": self.extrapolated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["delta", "value"])
            for d, v in zip(self.delta_ladder, self.values):
                wr.writerow([repr(d), repr(v)])


def richardson(deltas: Sequence[float], values: Sequence[float], order: float = 1.0) -> float:
    """Extrapolate the two finest ladder values assuming error ``~ delta**order``."""
    if len(values) < 2:
        return float(values[-1])
    r = (deltas[-2] / deltas[-1]) ** order
    return float((r * values[-1] - values[-2]) / (r - 1.0))


@lru_cache(maxsize=None)
def rotation_set(n: int, count: int | None = None) -> np.ndarray:
    """Spatial rotations used for isotropic averaging, shape ``(R, n, n)``.

    The plane uses ``count`` (default 4) angles at the midpoints of a uniform
    partition of a quarter turn; the grid is invariant under quarter turns, so
    this samples the orientation circle evenly.  Space uses the icosahedral
    group composed with a fixed generic rotation.
    """
    if n <= 1:
        return np.eye(max(n, 0))[None]
    if n == 2:
        R = 4 if count is None else int(count)
        ang = (np.arange(R) + 0.5) * (np.pi / 2) / R
        c, s = np.cos(ang), np.sin(ang)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], 1)
    if n == 3:
        base = Rotation.from_rotvec([0.3, 0.5, 0.7])
        mats = (Rotation.create_group("I") * base).as_matrix()
        if count is not None:
            mats = mats[:count]
        return mats
    raise ValueError("isotropic averaging is implemented for n <= 3")


def _check_chain(chain: PolyhedralChain) -> None:
    if not chain.time_flag:
        raise ValueError("parabolic content needs a space-time chain")
    if chain.n_space > 3:
        raise ValueError("grid covers are implemented for up to 3 space dimensions")


def _scaled(chain: PolyhedralChain, delta: float, offset, rot: np.ndarray | None) -> np.ndarray:
    V = np.array(chain.vertices, dtype=float)
    if rot is not None and chain.n_space >= 2:
        V[:, 1:] = V[:, 1:] @ rot.T
    scale = np.array([delta * delta] + [delta] * chain.n_space)
    off = np.asarray(offset, dtype=float)[: chain.ambient]
    U = V / scale - off
    return np.ascontiguousarray(U[chain.simplices])


def _cell_chunks(U: np.ndarray, w: np.ndarray, max_hits: int = 1 << 22
                 ) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Occupied cells in time-layer chunks as ``(keys, weight, base, strides)``.

    Keys are unique within the whole run since chunks are disjoint in time.
    """
    S, m, d = U.shape
    flat = U.reshape(-1, d)
    lo = np.floor(flat.min(axis=0)).astype(np.int64) - 1
    hi = np.floor(flat.max(axis=0)).astype(np.int64) + 1
    ext = hi - lo + 1
    strides = np.ones(d, dtype=np.int64)
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * ext[i + 1]
    if float(strides[0]) * float(ext[0]) >= 2.0**62:
        raise ValueError("grid too fine for 64-bit cell keys")
    t_lo = np.ceil(U[:, :, 0].min(axis=1) - PLANE_TOL).astype(np.int64) - 1
    t_hi = np.floor(U[:, :, 0].max(axis=1) + PLANE_TOL).astype(np.int64)
    order = np.argsort(t_lo, kind="stable")
    t_lo_sorted = t_lo[order]
    c = int(t_lo.min())
    c_end = int(t_hi.max()) + 1
    layers = 16
    keys_buf = np.empty(2 * max_hits, dtype=np.int64)
    wts_buf = np.empty(2 * max_hits, dtype=np.int64)
    while c < c_end:
        c_next = min(c + layers, c_end)
        upto = np.searchsorted(t_lo_sorted, c_next, side="left")
        cand = order[:upto]
        active = np.ascontiguousarray(cand[t_hi[cand] >= c]).astype(np.int64)
        if len(active):
            n_hits = grid_hits(U, w, active, c, c_next, PLANE_TOL, lo, strides, keys_buf, wts_buf)
            if n_hits < 0:
                if layers == 1:
                    keys_buf = np.empty(2 * len(keys_buf), dtype=np.int64)
                    wts_buf = np.empty(2 * len(wts_buf), dtype=np.int64)
                layers = max(1, layers // 4)
                continue
            keys, wts = keys_buf[:n_hits], wts_buf[:n_hits]
            if n_hits:
                if wts.min() == wts.max():
                    ukeys = np.unique(keys)
                    uw = np.full(len(ukeys), wts[0], dtype=np.int64)
                else:
                    o = np.lexsort((wts, keys))
                    ks = keys[o]
                    last = np.r_[ks[1:] != ks[:-1], True]
                    ukeys, uw = ks[last], wts[o][last]
                yield ukeys, uw, lo, strides
            layers = int(np.clip(layers * max_hits / max(n_hits, 1), 1, 1 << 30))
        else:
            layers *= 2
        c = c_next


def _decode(keys: np.ndarray, base: np.ndarray, strides: np.ndarray) -> np.ndarray:
    idx = np.empty((len(keys), len(strides)), dtype=np.int64)
    rem = keys.copy()
    for i, st in enumerate(strides):
        idx[:, i], rem = np.divmod(rem, st)
    return idx + base


def _cell_centers(idx: np.ndarray, delta: float, offset, n: int, rot: np.ndarray | None) -> np.ndarray:
    off = np.asarray(offset, dtype=float)[: n + 1]
    scale = np.array([delta * delta] + [delta] * n)
    P = (idx + off + 0.5) * scale
    if rot is not None and n >= 2:
        P[:, 1:] = P[:, 1:] @ rot  # inverse rotation
    return P


@dataclass(frozen=True)
class GridCover:
    """Occupied cells of one parabolic grid (in the unrotated frame)."""

    delta: float
    n: int
    offset: tuple[float, ...]
    cells: np.ndarray   # (C, 1+n) integer lower-corner indices
    weights: np.ndarray  # (C,) max |multiplicity| per cell

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def diameter(self) -> float:
        return self.delta * max(1.0, math.sqrt(self.n))

    def corners(self) -> np.ndarray:
        scale = np.array([self.delta**2] + [self.delta] * self.n)
        return (self.cells + np.asarray(self.offset)[: self.n + 1]) * scale

    def centers(self) -> np.ndarray:
        return _cell_centers(self.cells, self.delta, self.offset, self.n, None)

    def boxes(self) -> list[ParabolicBox]:
        return [ParabolicBox(float(c[0]), tuple(float(v) for v in c[1:]), self.delta)
                for c in self.corners()]

    def content(self, s: float) -> float:
        return alpha(s) * (self.diameter / 2) ** s * float(self.weights.sum())


def par_grid_cover(chain: PolyhedralChain, delta: float, offset=DEFAULT_OFFSET) -> GridCover:
    """All closed grid cells (time step ``delta**2``, space step ``delta``) met by the chain."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    _check_chain(chain)
    n = chain.n_space
    off = tuple(float(v) for v in np.asarray(offset, dtype=float)[: n + 1])
    if chain.is_empty():
        return GridCover(delta, n, off, np.zeros((0, n + 1), np.int64), np.zeros(0, np.int64))
    U = _scaled(chain, delta, off, None)
    w = np.ascontiguousarray(np.abs(chain.mult), dtype=np.int64)
    cells, weights = [], []
    for keys, wts, base, strides in _cell_chunks(U, w):
        cells.append(_decode(keys, base, strides))
        weights.append(wts)
    if not cells:
        return GridCover(delta, n, off, np.zeros((0, n + 1), np.int64), np.zeros(0, np.int64))
    return GridCover(delta, n, off, np.vstack(cells), np.concatenate(weights))


def _cover_sums(chain: PolyhedralChain, delta: float, offset, rot,
                weights: Sequence[WeightFn | None]) -> tuple[np.ndarray, int]:
    U = _scaled(chain, delta, offset, rot)
    w = np.ascontiguousarray(np.abs(chain.mult), dtype=np.int64)
    totals = np.zeros(len(weights))
    count = 0
    need_centers = any(g is not None for g in weights)
    for keys, wts, base, strides in _cell_chunks(U, w):
        count += len(keys)
        centers = None
        if need_centers:
            centers = _cell_centers(_decode(keys, base, strides), delta, offset,
                                    chain.n_space, rot)
        for j, g in enumerate(weights):
            if g is None:
                totals[j] += float(wts.sum())
            else:
                totals[j] += float(np.dot(wts, np.asarray(g(centers), dtype=float)))
    return totals, count


def par_content_weights(chain: PolyhedralChain, s: float, weights: Sequence[WeightFn | None],
                        ladder: Sequence[float] | None = None, *, isotropic: bool = True,
                        ambient: int | None = None, offset=DEFAULT_OFFSET,
                        extrapolation: str = "richardson", rotations: int | None = None
                        ) -> list[MeasureEstimate]:
    """Several weighted contents of one chain from a single pass over the grid covers.

    A weight of ``None`` means ``g = 1``.  Weights are evaluated at cell
    centres (midpoint rule).
    """
    ladder = tuple(float(d) for d in (DEFAULT_LADDER if ladder is None else ladder))
    if not ladder:
        raise ValueError("ladder must be nonempty")
    if min(ladder) <= 0:
        raise ValueError("ladder scales must be positive")
    if extrapolation not in ("richardson", "last"):
        raise ValueError(f"unknown extrapolation {extrapolation!r}")
    _check_chain(chain)
    if ambient is not None:
        chain = chain.embed(ambient)
    n = chain.n_space
    if len(offset) < n + 1:
        raise ValueError("offset needs one entry per axis")
    rots = rotation_set(n, rotations) if isotropic and n >= 2 else [None]
    values = np.zeros((len(weights), len(ladder)))
    cells = []
    for i, delta in enumerate(ladder):
        if chain.is_empty():
            cells.append(0)
            continue
        diam = delta * max(1.0, math.sqrt(n))
        unit = alpha(s) * (diam / 2) ** s
        acc = np.zeros(len(weights))
        cnt = 0
        for rot in rots:
            tot, c = _cover_sums(chain, delta, offset, rot, weights)
            acc += tot
            cnt += c
        values[:, i] = np.maximum(unit * acc / len(rots), 0.0)
        cells.append(cnt // len(rots))
        log.debug("delta=%g values=%s cells=%d", delta, values[:, i], cells[-1])
    out = []
    for row in values:
        ext = richardson(ladder, row) if extrapolation == "richardson" else row[-1]
        out.append(MeasureEstimate(float(s), ladder, tuple(float(v) for v in row),
                                   max(float(ext), 0.0), cells=tuple(cells)))
    return out


def par_content(chain: PolyhedralChain, s: float, ladder: Sequence[float] | None = None,
                weight: WeightFn | None = None, *, isotropic: bool = True,
                ambient: int | None = None, offset=DEFAULT_OFFSET,
                extrapolation: str = "richardson", rotations: int | None = None
                ) -> MeasureEstimate:
    """Grid estimate of ``int g d(theta H^s_par)`` over the chain along a delta ladder.

    ``weight`` is evaluated at cell centres (midpoint rule); ``ambient``
    embeds the chain into that many space dimensions first, so sets living
    in different spaces are measured with the same cell shape.  The
    extrapolated value assumes first-order convergence in ``delta``.
    """
    return par_content_weights(chain, s, [weight], ladder, isotropic=isotropic,
                               ambient=ambient, offset=offset, extrapolation=extrapolation,
                               rotations=rotations)[0]


# time slicing -------------------------------------------------------------------

def _select_crossing(tmin, tmax, t, t_top):
    if t == t_top:
        return (tmin < t) & (tmax >= t)
    return (tmin <= t) & (tmax > t)


def slice_at_time(track: PolyhedralChain, t: float) -> PolyhedralChain:
    """Intersection of a space-time chain with ``{time = t}`` as a chain in space.

    The slice is oriented as the bottom face of the part of the chain above
    ``t``, so a track oriented as (curve, time), whose boundary is its
    initial curve, slices to the curve at time ``t``.  A slice exactly at a
    vertex layer takes the simplices just above it.
    """
    if not track.time_flag:
        raise ValueError("slicing needs a space-time chain")
    if track.dim < 1:
        raise ValueError("slicing needs a chain of dimension >= 1")
    k = track.dim - 1
    n = track.n_space
    if track.is_empty():
        return PolyhedralChain.empty(k, n)
    X = track.simplex_coords()
    T = X[:, :, 0]
    tmin, tmax = T.min(axis=1), T.max(axis=1)
    sel = _select_crossing(tmin, tmax, float(t), float(tmax.max()))
    if not np.any(sel):
        return PolyhedralChain.empty(k, n)
    X, coef = X[sel], track.coefficients[sel]
    if track.dim == 1:
        return _slice_segments(X, coef, t, n)
    if track.dim == 2:
        return _slice_triangles(X, coef, t, n)
    return _slice_general(X, coef, t, n)


def _edge_points(X, t):
    """Cut points per simplex: vertices on the plane and strict edge crossings."""
    S, m, d = X.shape
    s = X[:, :, 0] - t
    pts = []
    masks = []
    for i in range(m):
        pts.append(X[:, i])
        masks.append(s[:, i] == 0.0)
    for i in range(m):
        for j in range(i + 1, m):
            cross = s[:, i] * s[:, j] < 0.0
            denom = np.where(cross, s[:, i] - s[:, j], 1.0)
            lam = np.where(cross, s[:, i] / denom, 0.0)
            p = X[:, i] + lam[:, None] * (X[:, j] - X[:, i])
            p[:, 0] = t
            pts.append(p)
            masks.append(cross)
    return np.stack(pts, 1), np.stack(masks, 1)


def _slice_segments(X, coef, t, n):
    P, M = _edge_points(X, t)
    idx = np.argmax(M, axis=1)
    pt = P[np.arange(len(P)), idx][:, 1:]
    sign = -np.sign(X[:, 1, 0] - X[:, 0, 0]).astype(np.int64)
    c = coef * sign
    keep = c != 0
    return PolyhedralChain.from_coords(pt[keep][:, None, :], np.abs(c[keep]), np.sign(c[keep]))


def _slice_triangles(X, coef, t, n):
    P, M = _edge_points(X, t)
    ok = M.sum(axis=1) >= 2
    P, M, X, coef = P[ok], M[ok], X[ok], coef[ok]
    order = np.argsort(~M, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(P))[:, None]
    seg = P[rows, order]  # (S, 2, d)
    E = X[:, 1:] - X[:, :1]
    F = seg[:, 1] - seg[:, 0]
    a = E[:, :, 0]                     # E . e_t
    b = np.einsum("sid,sd->si", E, F)  # E . F
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    c = -coef * np.sign(det).astype(np.int64)
    keep = c != 0
    return PolyhedralChain.from_coords(seg[keep][:, :, 1:], np.abs(c[keep]), np.sign(c[keep]),
                                       drop_degenerate=True)


def _slice_general(X, coef, t, n):
    """Slices of simplices of dimension >= 3: convex cut polygons fanned into simplices."""
    k = X.shape[1] - 2
    P, M = _edge_points(X, t)
    coords, coefs = [], []
    for s in range(len(X)):
        pts = np.unique(P[s][M[s]] + 0.0, axis=0)
        if len(pts) < k + 1:
            continue
        E = X[s, 1:] - X[s, 0]
        pieces = _convex_fan(pts, k)
        for tri in pieces:
            F = tri[1:] - tri[0]
            A = np.column_stack([E[:, 0], E @ F.T])
            sg = -int(np.sign(np.linalg.det(A)))
            if sg:
                coords.append(tri[:, 1:])
                coefs.append(int(coef[s]) * sg)
    if not coords:
        return PolyhedralChain.empty(k, n)
    coefs = np.array(coefs)
    return PolyhedralChain.from_coords(np.array(coords), np.abs(coefs), np.sign(coefs),
                                       drop_degenerate=True)


def _convex_fan(pts: np.ndarray, k: int) -> list[np.ndarray]:
    """Triangulate the convex hull of coplanar points of intrinsic dimension ``k``."""
    if len(pts) == k + 1:
        return [pts]
    if k != 2:
        from scipy.spatial import Delaunay

        c = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - c)
        Q = (pts - c) @ vt[:k].T
        return [pts[s] for s in Delaunay(Q).simplices]
    c = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - c)
    Q = (pts - c) @ vt[:2].T
    ang = np.arctan2(Q[:, 1], Q[:, 0])
    ring = pts[np.argsort(ang)]
    return [np.stack([ring[0], ring[i], ring[i + 1]]) for i in range(1, len(ring) - 1)]


def restrict_time(chain: PolyhedralChain, a: float, b: float) -> PolyhedralChain:
    """The part of a space-time chain with ``a <= time <= b`` (dimensions 1 and 2)."""
    if not chain.time_flag:
        raise ValueError("restriction needs a space-time chain")
    if chain.dim not in (1, 2):
        raise ValueError("time restriction is implemented for dimensions 1 and 2")
    if chain.is_empty() or b <= a:
        return PolyhedralChain.empty(chain.dim, chain.ambient, True)
    X = chain.simplex_coords()
    T = X[:, :, 0]
    inside = (T.min(axis=1) >= a) & (T.max(axis=1) <= b)
    cut = ~inside & (T.max(axis=1) > a) & (T.min(axis=1) < b)
    coords = [X[inside]]
    coefs = [chain.coefficients[inside]]
    for s in np.nonzero(cut)[0]:
        poly = _clip_polygon(X[s], a, b)
        if len(poly) < chain.dim + 1:
            continue
        if chain.dim == 1:
            pieces = [poly[[0, -1]]]
        else:
            pieces = [np.stack([poly[0], poly[i], poly[i + 1]]) for i in range(1, len(poly) - 1)]
        E = X[s, 1:] - X[s, 0]
        for p in pieces:
            F = p[1:] - p[0]
            sg = int(np.sign(np.linalg.det(E @ F.T)))
            if sg:
                coords.append(p[None])
                coefs.append(np.array([chain.coefficients[s] * sg]))
    C = np.concatenate(coords)
    K = np.concatenate(coefs)
    return PolyhedralChain.from_coords(C, np.abs(K), np.sign(K), time_flag=True,
                                       drop_degenerate=True)


def _clip_polygon(P: np.ndarray, a: float, b: float) -> np.ndarray:
    """Sutherland-Hodgman clip of an ordered simplex boundary to ``a <= t <= b``.

    For a segment the two vertices are treated as an open polyline.
    """
    if len(P) == 2:
        t0, t1 = P[0, 0], P[1, 0]
        lo_t, hi_t = max(min(t0, t1), a), min(max(t0, t1), b)
        if hi_t <= lo_t:
            return P[:0]
        def at(tt):
            lam = (tt - t0) / (t1 - t0)
            q = P[0] + lam * (P[1] - P[0])
            q[0] = tt
            return q
        ends = [at(lo_t), at(hi_t)] if t1 > t0 else [at(hi_t), at(lo_t)]
        return np.stack(ends)
    poly = list(P)
    for val, keep_ge in ((a, True), (b, False)):
        out = []
        for i in range(len(poly)):
            p, q = poly[i], poly[(i + 1) % len(poly)]
            pin = p[0] >= val if keep_ge else p[0] <= val
            qin = q[0] >= val if keep_ge else q[0] <= val
            if pin:
                out.append(p)
            if pin != qin:
                lam = (val - p[0]) / (q[0] - p[0])
                r = p + lam * (q - p)
                r[0] = val
                out.append(r)
        poly = out
        if not poly:
            break
    return np.array(poly) if poly else P[:0]


def drop_time(chain: PolyhedralChain) -> PolyhedralChain:
    """Spatial projection ``(t, x) -> x`` of a space-time chain; degenerate images are dropped."""
    if not chain.time_flag:
        raise ValueError("projection needs a space-time chain")
    if chain.is_empty():
        return PolyhedralChain.empty(chain.dim, chain.n_space)
    X = chain.simplex_coords()[:, :, 1:]
    return PolyhedralChain.from_coords(X, chain.mult, chain.sign, drop_degenerate=True)


__all__ = [
    "DEFAULT_LADDER", "DEFAULT_OFFSET", "GridCover", "MeasureEstimate", "ParabolicBox",
    "alpha", "drop_time", "par_content", "par_content_weights", "par_grid_cover", "restrict_time", "richardson",
    "rotation_set", "slice_at_time",
]
