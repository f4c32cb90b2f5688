"""Space-time points, scalings and oriented simplicial chains.

Points of space-time carry the time as coordinate 0.  A chain whose
``time_flag`` is set lives in space-time (time first, then the ``n`` spatial
coordinates); otherwise it lives in plain Euclidean space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Iterable

import numpy as np

SCALING_KINDS = ("parabolic", "euclidean", "cylindrical")

# relative tolerance below which a simplex counts as degenerate
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    x: tuple[float, ...] = ()

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))
        if not math.isfinite(self.t) or not all(math.isfinite(v) for v in x):
            raise ValueError("space-time point coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array((self.t, *self.x))

    @classmethod
    def from_array(cls, a) -> "SpaceTimePoint":
        a = np.asarray(a, dtype=float)
        return cls(a[0], tuple(a[1:]))


def par_dist(p: SpaceTimePoint, q: SpaceTimePoint) -> float:
    """Parabolic distance ``max(sqrt|t-s|, |x-y|)``."""
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n}")
    dx = math.dist(p.x, q.x) if p.n else 0.0
    return max(math.sqrt(abs(p.t - q.t)), dx)


def par_dist_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised parabolic distance between rows of two ``(..., 1+n)`` arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("dimension mismatch")
    dt = np.sqrt(np.abs(a[..., 0] - b[..., 0]))
    dx = np.linalg.norm(a[..., 1:] - b[..., 1:], axis=-1)
    return np.maximum(dt, dx)


@dataclass(frozen=True)
class ScalingMap:
    """Parabolic ``(t,x) -> (l^2 t, l x)``, Euclidean ``(l t, l x)`` or
    cylindrical ``(z,x) -> (eps z, x)`` rescaling."""

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in SCALING_KINDS:
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        if not self.parameter > 0:
            raise ValueError("scaling parameter must be positive")

    def factors(self, n: int) -> np.ndarray:
        """Diagonal of the linear map on ``R^{1,n}``."""
        lam = float(self.parameter)
        if self.kind == "parabolic":
            return np.array([lam * lam] + [lam] * n)
        if self.kind == "euclidean":
            return np.full(n + 1, lam)
        return np.array([lam] + [1.0] * n)

    def apply_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts * self.factors(pts.shape[-1] - 1)


def parabolic(lam: float) -> ScalingMap:
    return ScalingMap("parabolic", lam)


def euclidean(lam: float) -> ScalingMap:
    return ScalingMap("euclidean", lam)


def cylindrical(eps: float) -> ScalingMap:
    return ScalingMap("cylindrical", eps)


def apply_scaling(smap: ScalingMap, p: SpaceTimePoint) -> SpaceTimePoint:
    return SpaceTimePoint.from_array(smap.apply_array(p.as_array()))


def _perm_parity(order: np.ndarray) -> np.ndarray:
    """Parity (+1/-1) of each row permutation in an ``(S, m)`` argsort array."""
    order = np.array(order, copy=True)
    S, m = order.shape
    sign = np.ones(S, dtype=np.int64)
    # selection sort by swaps counts transpositions
    for i in range(m):
        j = np.argmin(order[:, i:], axis=1) + i
        swap = j != i
        if np.any(swap):
            rows = np.nonzero(swap)[0]
            a = order[rows, i].copy()
            order[rows, i] = order[rows, j[rows]]
            order[rows, j[rows]] = a
            sign[rows] *= -1
    return sign


def simplex_volumes(coords: np.ndarray) -> np.ndarray:
    """Euclidean k-volumes of simplices given as ``(S, k+1, d)`` vertex arrays."""
    coords = np.asarray(coords, dtype=float)
    S, m, _ = coords.shape
    k = m - 1
    if k == 0:
        return np.ones(S)
    E = coords[:, 1:, :] - coords[:, :1, :]
    G = np.einsum("sid,sjd->sij", E, E)
    det = np.linalg.det(G) if S else np.zeros(0)
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def _degenerate_mask(coords: np.ndarray) -> np.ndarray:
    S, m, _ = coords.shape
    k = m - 1
    if k == 0 or S == 0:
        return np.zeros(S, dtype=bool)
    vol = simplex_volumes(coords)
    edges = coords[:, :, None, :] - coords[:, None, :, :]
    longest = np.sqrt((edges**2).sum(-1)).max(axis=(1, 2))
    return vol <= DEGENERACY_RTOL * longest**k / math.factorial(k)


@dataclass(frozen=True, eq=False)
class PolyhedralChain:
    """Oriented simplicial k-chain with integer multiplicities.

    ``simplices`` indexes into ``vertices``; the signed coefficient of a
    simplex is ``mult * sign``.
    """

    dim: int
    vertices: np.ndarray
    simplices: np.ndarray
    mult: np.ndarray
    sign: np.ndarray
    time_flag: bool = False

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float, copy=True)
        if V.ndim != 2:
            V = V.reshape(-1, V.shape[-1] if V.ndim else 0)
        S = np.array(self.simplices, dtype=np.int64, copy=True).reshape(-1, self.dim + 1)
        mult = np.array(self.mult, dtype=np.int64, copy=True).reshape(-1)
        sign = np.array(self.sign, dtype=np.int64, copy=True).reshape(-1)
        if self.dim < 0:
            raise ValueError("chain dimension must be >= 0")
        if not (len(S) == len(mult) == len(sign)):
            raise ValueError("simplices, mult and sign lengths differ")
        if not np.all(np.isfinite(V)):
            raise ValueError("vertex coordinates must be finite")
        if np.any(mult == 0):
            raise ValueError("multiplicities must be nonzero")
        if np.any(np.abs(sign) != 1):
            raise ValueError("orientation signs must be +1 or -1")
        if len(S) and (S.min() < 0 or S.max() >= len(V)):
            raise ValueError("simplex vertex index out of range")
        if self.time_flag and V.shape[1] < 1:
            raise ValueError("space-time chain needs a time coordinate")
        if len(S):
            if self.dim > V.shape[1]:
                raise ValueError("simplex dimension exceeds ambient dimension")
            if np.any(_degenerate_mask(V[S])):
                raise ValueError("degenerate simplex in chain")
        for name, arr in (("vertices", V), ("simplices", S), ("mult", mult), ("sign", sign)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    # construction helpers -------------------------------------------------
    @classmethod
    def empty(cls, dim: int, ambient: int, time_flag: bool = False) -> "PolyhedralChain":
        return cls(dim, np.zeros((0, ambient)), np.zeros((0, dim + 1), dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), time_flag)

    @classmethod
    def from_coords(cls, coords, mult=None, sign=None, time_flag: bool = False,
                    drop_degenerate: bool = False) -> "PolyhedralChain":
        """Build a chain from ``(S, k+1, d)`` vertex coordinates.

        Vertices with bitwise-identical coordinates are merged, which is what
        lets shared faces cancel in :func:`chain_boundary`.
        """
        coords = np.asarray(coords, dtype=float)
        S, m, d = coords.shape
        mult = np.ones(S, dtype=np.int64) if mult is None else np.asarray(mult, dtype=np.int64)
        sign = np.ones(S, dtype=np.int64) if sign is None else np.asarray(sign, dtype=np.int64)
        if drop_degenerate and S:
            keep = ~_degenerate_mask(coords)
            coords, mult, sign = coords[keep], mult[keep], sign[keep]
            S = len(coords)
        if S == 0:
            return cls.empty(m - 1, d, time_flag)
        flat = coords.reshape(-1, d) + 0.0  # folds -0.0 into 0.0 for exact matching
        verts, inv = np.unique(flat, axis=0, return_inverse=True)
        simp = inv.reshape(S, m)
        if drop_degenerate:
            # merged vertices can collapse a simplex
            ok = np.array([len(set(row)) == m for row in simp]) if m > 1 else np.ones(S, bool)
            simp, mult, sign = simp[ok], mult[ok], sign[ok]
        return cls(m - 1, verts, simp, mult, sign, time_flag)

    @classmethod
    def polygon(cls, points, closed: bool = True, time: float | None = None) -> "PolyhedralChain":
        """Polygonal 1-chain through ``points`` in order.

        With ``time`` given the curve is placed in space-time at that time.
        """
        P = np.asarray(points, dtype=float)
        if time is not None:
            P = np.column_stack([np.full(len(P), float(time)), P])
        N = len(P)
        idx = np.arange(N)
        if closed:
            simp = np.column_stack([idx, np.roll(idx, -1)])
        else:
            simp = np.column_stack([idx[:-1], idx[1:]])
        ones = np.ones(len(simp), dtype=np.int64)
        return cls(1, P, simp, ones, ones, time is not None)

    # basic accessors -------------------------------------------------------
    @property
    def ambient(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_space(self) -> int:
        return self.ambient - 1 if self.time_flag else self.ambient

    @property
    def coefficients(self) -> np.ndarray:
        return self.mult * self.sign

    def __len__(self) -> int:
        return len(self.simplices)

    def is_empty(self) -> bool:
        return len(self.simplices) == 0

    def simplex_coords(self) -> np.ndarray:
        return self.vertices[self.simplices]

    def volumes(self) -> np.ndarray:
        return simplex_volumes(self.simplex_coords())

    def mass(self) -> float:
        return chain_mass(self)

    def time_extent(self) -> tuple[float, float]:
        if not self.time_flag:
            raise ValueError("chain has no time coordinate")
        used = self.vertices[np.unique(self.simplices)] if len(self) else self.vertices
        if len(used) == 0:
            return (0.0, 0.0)
        return float(used[:, 0].min()), float(used[:, 0].max())

    def with_vertices(self, vertices, time_flag: bool | None = None) -> "PolyhedralChain":
        """Same combinatorics, new vertex positions (pushforward by a vertex map)."""
        tf = self.time_flag if time_flag is None else time_flag
        return PolyhedralChain(self.dim, vertices, self.simplices, self.mult, self.sign, tf)

    def compact(self) -> "PolyhedralChain":
        """Drop vertices not referenced by any simplex."""
        if self.is_empty():
            return PolyhedralChain.empty(self.dim, self.ambient, self.time_flag)
        used, inv = np.unique(self.simplices, return_inverse=True)
        return PolyhedralChain(self.dim, self.vertices[used], inv.reshape(self.simplices.shape),
                               self.mult, self.sign, self.time_flag)

    def embed(self, ambient_space: int) -> "PolyhedralChain":
        """Isometric embedding into a higher spatial dimension (zero padding)."""
        extra = ambient_space - self.n_space
        if extra < 0:
            raise ValueError("cannot embed into a lower dimension")
        if extra == 0:
            return self
        V = np.hstack([self.vertices, np.zeros((len(self.vertices), extra))])
        return self.with_vertices(V)

    # serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": int(self.dim),
            "ambient": int(self.ambient),
            "time_flag": bool(self.time_flag),
            "vertices": self.vertices.tolist(),
            "simplices": [
                {"verts": [int(v) for v in s], "mult": int(m), "sign": int(g)}
                for s, m, g in zip(self.simplices, self.mult, self.sign)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolyhedralChain":
        dim = int(d["dim"])
        ambient = int(d["ambient"])
        V = np.asarray(d["vertices"], dtype=float).reshape(-1, ambient)
        simp = d["simplices"]
        S = np.array([s["verts"] for s in simp], dtype=np.int64).reshape(-1, dim + 1)
        mult = np.array([s["mult"] for s in simp], dtype=np.int64)
        sign = np.array([s.get("sign", 1) for s in simp], dtype=np.int64)
        return cls(dim, V, S, mult, sign, bool(d.get("time_flag", False)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PolyhedralChain":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PolyhedralChain":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def chain_mass(c: PolyhedralChain) -> float:
    """Sum of ``|multiplicity| * k-volume`` over the simplices."""
    if c.is_empty():
        return 0.0
    return float(np.sum(np.abs(c.mult) * c.volumes()))


def _canonical(simplices: np.ndarray, coef: np.ndarray):
    """Sort each simplex's vertex indices, folding the permutation parity into
    the coefficient, then sum coefficients of identical simplices."""
    if len(simplices) == 0:
        return simplices.reshape(0, simplices.shape[1]), coef
    order = np.argsort(simplices, axis=1, kind="stable")
    parity = _perm_parity(order)
    srt = np.take_along_axis(simplices, order, axis=1)
    uniq, inv = np.unique(srt, axis=0, return_inverse=True)
    total = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(total, inv.reshape(-1), coef * parity)
    keep = total != 0
    return uniq[keep], total[keep]


def reduce_chain(c: PolyhedralChain) -> PolyhedralChain:
    """Combine simplices sharing a vertex set; drops those that cancel."""
    simp, coef = _canonical(c.simplices, c.coefficients)
    return PolyhedralChain(c.dim, c.vertices, simp, np.abs(coef), np.sign(coef), c.time_flag)


def chain_boundary(c: PolyhedralChain) -> PolyhedralChain:
    """Simplicial boundary with induced orientations; opposite faces cancel."""
    if c.dim < 1:
        raise ValueError("boundary needs a chain of dimension >= 1")
    if c.is_empty():
        return PolyhedralChain.empty(c.dim - 1, c.ambient, c.time_flag)
    m = c.dim + 1
    faces = []
    coefs = []
    for i in range(m):
        faces.append(np.delete(c.simplices, i, axis=1))
        coefs.append(c.coefficients * (-1) ** i)
    simp, coef = _canonical(np.vstack(faces), np.concatenate(coefs))
    return PolyhedralChain(c.dim - 1, c.vertices, simp, np.abs(coef), np.sign(coef), c.time_flag)


def canonical_form(c: PolyhedralChain, decimals: int | None = None) -> dict:
    """Coordinate-keyed canonical form: maps sorted vertex-coordinate tuples to
    signed coefficients.  Independent of vertex numbering."""
    out: dict = {}
    V = c.vertices if decimals is None else np.round(c.vertices, decimals) + 0.0
    for simp, coef in zip(c.simplices, c.coefficients):
        pts = [tuple(V[i]) for i in simp]
        order = sorted(range(len(pts)), key=lambda j: pts[j])
        parity = _perm_parity(np.array([order]))[0]
        key = tuple(pts[j] for j in order)
        out[key] = out.get(key, 0) + int(coef * parity)
    return {k: v for k, v in out.items() if v != 0}


def chains_equal(a: PolyhedralChain, b: PolyhedralChain, decimals: int | None = None) -> bool:
    if a.dim != b.dim or a.ambient != b.ambient:
        return False
    return canonical_form(a, decimals) == canonical_form(b, decimals)


def push_scaling(smap: ScalingMap, c: PolyhedralChain) -> PolyhedralChain:
    """Pushforward of a chain under a scaling map.

    Chains without a time coordinate only accept Euclidean scalings.
    """
    if c.time_flag:
        return c.with_vertices(smap.apply_array(c.vertices))
    if smap.kind != "euclidean":
        raise ValueError(f"{smap.kind} scaling needs a space-time chain")
    return c.with_vertices(c.vertices * smap.parameter)


def add_chains(chains: Iterable[PolyhedralChain]) -> PolyhedralChain:
    """Formal sum; vertex sets are concatenated, not merged."""
    chains = list(chains)
    if not chains:
        raise ValueError("need at least one chain")
    dim, amb, tf = chains[0].dim, chains[0].ambient, chains[0].time_flag
    Vs, Ss, Ms, Gs = [], [], [], []
    off = 0
    for c in chains:
        if (c.dim, c.ambient, c.time_flag) != (dim, amb, tf):
            raise ValueError("incompatible chains")
        Vs.append(c.vertices)
        Ss.append(c.simplices + off)
        Ms.append(c.mult)
        Gs.append(c.sign)
        off += len(c.vertices)
    return PolyhedralChain(dim, np.vstack(Vs), np.vstack(Ss), np.concatenate(Ms),
                           np.concatenate(Gs), tf)


def negate(c: PolyhedralChain) -> PolyhedralChain:
    return PolyhedralChain(c.dim, c.vertices, c.simplices, c.mult, -c.sign, c.time_flag)


def box_chain(lower, upper, time_flag: bool = True) -> PolyhedralChain:
    """Positively oriented simplicial decomposition of an axis-aligned box.

    Axes with zero extent are kept as constant coordinates, so a box with some
    flat sides is a lower-dimensional chain in the full ambient space.  The
    Kuhn triangulation (one simplex per permutation of the active axes) is used.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    active = np.nonzero(hi > lo)[0]
    k = len(active)
    coords = []
    for perm in permutations(range(k)):
        p = lo.copy()
        verts = [p.copy()]
        for a in perm:
            p[active[a]] = hi[active[a]]
            verts.append(p.copy())
        coords.append(verts)
    coords = np.array(coords)
    # orientation of each Kuhn simplex relative to the active coordinate frame
    signs = []
    for simplex in coords:
        E = (simplex[1:] - simplex[0])[:, active]
        signs.append(int(np.sign(np.linalg.det(E))) if k else 1)
    return PolyhedralChain.from_coords(coords, sign=np.array(signs), time_flag=time_flag)


def grid_box_chain(lower, upper, cells, time_flag: bool = True) -> PolyhedralChain:
    """Box subdivided into ``cells`` sub-boxes per active axis before triangulating."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    cells = np.broadcast_to(np.asarray(cells, dtype=int), lo.shape)
    active = np.nonzero(hi > lo)[0]
    axes = [np.linspace(lo[a], hi[a], cells[a] + 1) for a in active]
    pieces = []
    for idx in np.ndindex(*[cells[a] for a in active]):
        sl = lo.copy()
        sh = hi.copy()
        for j, a in enumerate(active):
            sl[a] = axes[j][idx[j]]
            sh[a] = axes[j][idx[j] + 1]
        pieces.append(box_chain(sl, sh, time_flag))
    coords = np.concatenate([p.simplex_coords() for p in pieces])
    signs = np.concatenate([p.sign for p in pieces])
    return PolyhedralChain.from_coords(coords, sign=signs, time_flag=time_flag)
