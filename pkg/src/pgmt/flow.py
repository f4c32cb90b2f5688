"""Curve-shortening flow of polygonal curves.

Each step moves the vertices by the discrete curvature vector
``2/(h_{i-1}+h_i) * ((X_{i+1}-X_i)/h_i - (X_i-X_{i-1})/h_{i-1})``, implicit in
the positions and explicit in the edge lengths ``h``.  On a regular polygon
inscribed in a circle of radius ``r`` this vector has length exactly ``1/r``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numba as nb
import numpy as np

from .geometry import PolyhedralChain

log = logging.getLogger(__name__)


class FlowError(RuntimeError):
    """Raised when a run fails to reach extinction; carries the partial history."""

    def __init__(self, message: str, history: "FlowHistory | None" = None):
        super().__init__(message)
        self.history = history


# linear algebra ---------------------------------------------------------------

@nb.njit(cache=True)
def _thomas(a, b, c, d):
    """Tridiagonal solve; ``a`` sub-, ``b`` main, ``c`` super-diagonal; ``d`` is (N, m)."""
    N, m = d.shape
    cp = np.empty(N)
    dp = np.empty_like(d)
    cp[0] = c[0] / b[0]
    for j in range(m):
        dp[0, j] = d[0, j] / b[0]
    for i in range(1, N):
        den = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / den
        for j in range(m):
            dp[i, j] = (d[i, j] - a[i] * dp[i - 1, j]) / den
    x = np.empty_like(d)
    for j in range(m):
        x[N - 1, j] = dp[N - 1, j]
    for i in range(N - 2, -1, -1):
        for j in range(m):
            x[i, j] = dp[i, j] - cp[i] * x[i + 1, j]
    return x


@nb.njit(cache=True)
def _cyclic_solve(a, b, c, d):
    """Periodic tridiagonal solve (corners ``a[0]`` and ``c[N-1]``) by Sherman-Morrison."""
    N = b.shape[0]
    gamma = -b[0]
    bb = b.copy()
    bb[0] = b[0] - gamma
    bb[N - 1] = b[N - 1] - a[0] * c[N - 1] / gamma
    x = _thomas(a, bb, c, d)
    u = np.zeros((N, 1))
    u[0, 0] = gamma
    u[N - 1, 0] = c[N - 1]
    z = _thomas(a, bb, c, u)
    fact_den = 1.0 + z[0, 0] + a[0] * z[N - 1, 0] / gamma
    for j in range(d.shape[1]):
        fact = (x[0, j] + a[0] * x[N - 1, j] / gamma) / fact_den
        for i in range(N):
            x[i, j] -= fact * z[i, 0]
    return x


@nb.njit(cache=True)
def _step_closed(X, dt):
    N = X.shape[0]
    h = np.empty(N)
    for i in range(N):
        j = (i + 1) % N
        s = 0.0
        for k in range(X.shape[1]):
            s += (X[j, k] - X[i, k]) ** 2
        h[i] = math.sqrt(s)
    a = np.empty(N)
    b = np.empty(N)
    c = np.empty(N)
    for i in range(N):
        hm = h[i - 1]
        hp = h[i]
        w = 2.0 * dt / (hm + hp)
        a[i] = -w / hm
        c[i] = -w / hp
        b[i] = 1.0 + w / hm + w / hp
    return _cyclic_solve(a, b, c, X)


@nb.njit(cache=True)
def _step_open(X, dt, first, last):
    N = X.shape[0]
    h = np.empty(N - 1)
    for i in range(N - 1):
        s = 0.0
        for k in range(X.shape[1]):
            s += (X[i + 1, k] - X[i, k]) ** 2
        h[i] = math.sqrt(s)
    a = np.zeros(N)
    b = np.ones(N)
    c = np.zeros(N)
    rhs = X.copy()
    rhs[0] = first
    rhs[N - 1] = last
    for i in range(1, N - 1):
        hm = h[i - 1]
        hp = h[i]
        w = 2.0 * dt / (hm + hp)
        a[i] = -w / hm
        c[i] = -w / hp
        b[i] = 1.0 + w / hm + w / hp
    return _thomas(a, b, c, rhs)


@nb.njit(cache=True)
def _resample_closed(X, N):
    M, d = X.shape
    s = np.empty(M + 1)
    s[0] = 0.0
    for i in range(M):
        j = (i + 1) % M
        acc = 0.0
        for k in range(d):
            acc += (X[j, k] - X[i, k]) ** 2
        s[i + 1] = s[i] + math.sqrt(acc)
    out = np.empty((N, d))
    seg = 0
    for q in range(N):
        target = s[M] * q / N
        while seg < M - 1 and s[seg + 1] <= target:
            seg += 1
        span = s[seg + 1] - s[seg]
        lam = (target - s[seg]) / span if span > 0 else 0.0
        j = (seg + 1) % M
        for k in range(d):
            out[q, k] = X[seg, k] + lam * (X[j, k] - X[seg, k])
    return out


@nb.njit(cache=True)
def _length_closed(X):
    N, d = X.shape
    L = 0.0
    for i in range(N):
        j = (i + 1) % N
        acc = 0.0
        for k in range(d):
            acc += (X[j, k] - X[i, k]) ** 2
        L += math.sqrt(acc)
    return L


@nb.njit(cache=True)
def _min_edge(X):
    N, d = X.shape
    m = np.inf
    for i in range(N):
        j = (i + 1) % N
        acc = 0.0
        for k in range(d):
            acc += (X[j, k] - X[i, k]) ** 2
        m = min(m, acc)
    return math.sqrt(m)


@nb.njit(cache=True)
def _advance(X, t, it, n_steps, dt_fixed, dt_factor, redistribute, stop_diam):
    """Up to ``n_steps`` closed-curve steps; stops early once the curve fits in a ball
    of diameter ``stop_diam`` (checked every 10 steps).

    Returns the new state, the step counter, a done flag and the largest
    relative length increase seen.
    """
    N, d = X.shape
    worst = 0.0
    length = _length_closed(X)
    for _ in range(n_steps):
        h = _min_edge(X)
        dt = dt_fixed if dt_fixed > 0 else dt_factor * h * h
        X = _step_closed(X, dt)
        it += 1
        t += dt
        if redistribute > 0 and it % redistribute == 0:
            X = _resample_closed(X, N)
        new_len = _length_closed(X)
        worst = max(worst, new_len / length - 1.0)
        length = new_len
        if it % 10 == 0:
            c = np.zeros(d)
            for i in range(N):
                for k in range(d):
                    c[k] += X[i, k] / N
            r = 0.0
            for i in range(N):
                acc = 0.0
                for k in range(d):
                    acc += (X[i, k] - c[k]) ** 2
                r = max(r, acc)
            if 2.0 * math.sqrt(r) < stop_diam:
                return X, t, it, True, worst
    return X, t, it, False, worst


# curve utilities --------------------------------------------------------------

def edge_lengths(X: np.ndarray, closed: bool = True) -> np.ndarray:
    D = (np.roll(X, -1, axis=0) - X) if closed else np.diff(X, axis=0)
    return np.linalg.norm(D, axis=1)


def curve_length(X: np.ndarray, closed: bool = True) -> float:
    return float(edge_lengths(X, closed).sum())


def signed_area(X: np.ndarray) -> float:
    """Shoelace area of a closed planar polygon (positive when counterclockwise)."""
    x, y = X[:, 0], X[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def diameter(X: np.ndarray) -> float:
    D = X[:, None, :] - X[None, :, :]
    return float(np.sqrt((D**2).sum(-1)).max())


def resample(X: np.ndarray, N: int, closed: bool = True) -> np.ndarray:
    """``N`` points equally spaced in arclength along the polygon, starting at ``X[0]``."""
    P = np.vstack([X, X[:1]]) if closed else X
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    targets = np.linspace(0.0, s[-1], N + 1 if closed else N)
    if closed:
        targets = targets[:-1]
    return np.column_stack([np.interp(targets, s, P[:, k]) for k in range(P.shape[1])])


@nb.njit(cache=True)
def _orient(px, py, qx, qy, rx, ry):
    v = (qx - px) * (ry - py) - (qy - py) * (rx - px)
    return (v > 0.0) - (v < 0.0)


@nb.njit(cache=True)
def self_intersects(X) -> bool:
    """Whether two non-adjacent edges of a closed planar polygon properly cross."""
    N = X.shape[0]
    for i in range(N):
        i2 = (i + 1) % N
        ax, ay, bx, by = X[i, 0], X[i, 1], X[i2, 0], X[i2, 1]
        for j in range(i + 2, N):
            if i == 0 and j == N - 1:
                continue
            j2 = (j + 1) % N
            cx, cy, dx, dy = X[j, 0], X[j, 1], X[j2, 0], X[j2, 1]
            if max(cx, dx) < min(ax, bx) or max(ax, bx) < min(cx, dx):
                continue
            if max(cy, dy) < min(ay, by) or max(ay, by) < min(cy, dy):
                continue
            o1 = _orient(ax, ay, bx, by, cx, cy)
            o2 = _orient(ax, ay, bx, by, dx, dy)
            o3 = _orient(cx, cy, dx, dy, ax, ay)
            o4 = _orient(cx, cy, dx, dy, bx, by)
            if o1 * o2 < 0 and o3 * o4 < 0:
                return True
    return False


# initial curves ---------------------------------------------------------------

def _dense_theta(m: int = 4096) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, m, endpoint=False)


def circle(r0: float = 1.0, center=(0.0, 0.0), N: int = 256) -> np.ndarray:
    th = np.linspace(0.0, 2 * np.pi, N, endpoint=False)
    return np.column_stack([center[0] + r0 * np.cos(th), center[1] + r0 * np.sin(th)])


def ellipse(a: float = 2.0, b: float = 1.0, N: int = 256) -> np.ndarray:
    th = _dense_theta()
    return resample(np.column_stack([a * np.cos(th), b * np.sin(th)]), N)


def rounded_polygon(sides: int = 4, radius: float = 1.0, rounding: float = 0.3,
                    N: int = 256) -> np.ndarray:
    """Regular polygon with circumradius ``radius`` offset outward by a disc of radius ``rounding``."""
    ang = 2 * np.pi * np.arange(sides) / sides
    corners = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    pts = []
    for i in range(sides):
        p, q = corners[i], corners[(i + 1) % sides]
        edge = q - p
        nrm = np.array([edge[1], -edge[0]]) / np.linalg.norm(edge)
        # arc around p from previous edge normal to this edge normal
        prev = p - corners[i - 1]
        pn = np.array([prev[1], -prev[0]]) / np.linalg.norm(prev)
        a0, a1 = math.atan2(pn[1], pn[0]), math.atan2(nrm[1], nrm[0])
        if a1 < a0:
            a1 += 2 * np.pi
        arc = np.linspace(a0, a1, 64, endpoint=False)
        pts.append(p + rounding * np.column_stack([np.cos(arc), np.sin(arc)]))
        seg = np.linspace(0.0, 1.0, 256, endpoint=False)[:, None]
        pts.append(p + rounding * nrm + seg * edge)
    return resample(np.vstack(pts), N)


def fourier_circle(r0: float = 1.0, amplitude: float = 0.15, modes: int = 5, seed: int = 0,
                   N: int = 256) -> np.ndarray:
    """Star-shaped curve ``r(th) = r0 (1 + sum a_k cos(k th + phi_k))`` with random coefficients.

    Coefficients decay like ``1/k`` and are rescaled so that the relative
    perturbation is at most ``amplitude`` (< 1 keeps the curve embedded).
    """
    rng = np.random.default_rng(seed)
    k = np.arange(2, modes + 2)
    a = rng.standard_normal(len(k)) / k
    phi = rng.uniform(0, 2 * np.pi, len(k))
    th = _dense_theta()
    pert = (a[:, None] * np.cos(k[:, None] * th[None] + phi[:, None])).sum(0)
    pert *= amplitude / max(np.abs(pert).max(), 1e-300)
    r = r0 * (1.0 + pert)
    return resample(np.column_stack([r * np.cos(th), r * np.sin(th)]), N)


def saddle(r0: float = 1.0, height: float = 0.3, N: int = 256) -> np.ndarray:
    """Closed space curve ``(cos th, sin th, h cos 2th)`` in R^3."""
    th = _dense_theta()
    return resample(np.column_stack([r0 * np.cos(th), r0 * np.sin(th),
                                     height * np.cos(2 * th)]), N)


CURVES: dict[str, Callable[..., np.ndarray]] = {
    "circle": circle,
    "ellipse": ellipse,
    "rounded_polygon": rounded_polygon,
    "fourier": fourier_circle,
    "saddle": saddle,
}


def make_curve(spec: dict | str, N: int = 256) -> np.ndarray:
    """Initial curve from a registry spec such as ``{"name": "ellipse", "a": 2, "b": 1}``."""
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    if name not in CURVES:
        raise KeyError(f"unknown curve {name!r}; known: {sorted(CURVES)}")
    return CURVES[name](N=N, **spec)


# flow driver -------------------------------------------------------------------

@dataclass(frozen=True)
class FlowOptions:
    n_vertices: int = 256
    dt_factor: float = 0.25       # dt = dt_factor * (min edge)^2
    dt: float | None = None       # fixed step overrides the factor
    redistribute_every: int = 10
    snapshot_every: int = 200
    extinction_factor: float = 1e-3
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.n_vertices < 8:
            raise ValueError("need at least 8 vertices")
        if self.dt_factor <= 0 or (self.dt is not None and self.dt <= 0):
            raise ValueError("time step must be positive")
        if self.snapshot_every < 1 or self.redistribute_every < 0:
            raise ValueError("invalid stride")


@dataclass(frozen=True)
class Snapshot:
    t: float
    curve: PolyhedralChain
    mass: float


@dataclass(frozen=True, eq=False)
class FlowHistory:
    """Time-stamped polygonal curves of one flow run.

    ``points[i]`` holds the ``(N, n)`` vertices at ``times[i]``; vertex ``j``
    of consecutive snapshots corresponds, which is what the space-time track
    is lofted from.
    """

    times: np.ndarray
    points: tuple[np.ndarray, ...]
    extinction_time: float
    area0: float | None
    embedded: bool = True
    label: str = ""
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) != len(self.points):
            raise ValueError("one time per snapshot")
        if np.any(np.diff(t) <= 0):
            raise ValueError("snapshot times must increase strictly")
        if len(t) and self.extinction_time < t[-1]:
            raise ValueError("extinction time precedes the last snapshot")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n(self) -> int:
        return self.points[0].shape[1]

    @property
    def planar(self) -> bool:
        return self.n == 2

    @property
    def lengths(self) -> np.ndarray:
        return np.array([curve_length(P) for P in self.points])

    @property
    def areas(self) -> np.ndarray:
        if not self.planar:
            return np.full(len(self), np.nan)
        return np.array([signed_area(P) for P in self.points])

    @property
    def diameters(self) -> np.ndarray:
        return np.array([diameter(P) for P in self.points])

    @property
    def mass0(self) -> float:
        return curve_length(self.points[0])

    def chain(self, i: int) -> PolyhedralChain:
        return PolyhedralChain.polygon(self.points[i])

    @property
    def snapshots(self) -> list[Snapshot]:
        return [Snapshot(float(t), self.chain(i), curve_length(P))
                for i, (t, P) in enumerate(zip(self.times, self.points))]

    def curve_at(self, t: float) -> np.ndarray:
        """Vertices at time ``t`` by linear interpolation between bracketing snapshots."""
        if t < self.times[0] or t > self.times[-1]:
            raise ValueError("time outside the stored history")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i >= len(self) - 1:
            return self.points[-1]
        t0, t1 = self.times[i], self.times[i + 1]
        lam = (t - t0) / (t1 - t0)
        return (1 - lam) * self.points[i] + lam * self.points[i + 1]

    def area_rates(self) -> np.ndarray:
        """``-dA/dt`` between consecutive snapshots (planar only)."""
        A = self.areas
        return -np.diff(np.abs(A)) / np.diff(self.times)

    def to_dict(self, include_points: bool = False) -> dict:
        out = {
            "label": self.label,
            "extinction_time": self.extinction_time,
            "area0": self.area0,
            "embedded": self.embedded,
            "options": self.options,
            "snapshots": [
                {"t": float(t), "length": float(L), "area": None if math.isnan(a) else float(a),
                 "diameter": float(d)}
                for t, L, a, d in zip(self.times, self.lengths, self.areas, self.diameters)
            ],
        }
        if include_points:
            out["points"] = [P.tolist() for P in self.points]
        return out

    def to_json(self, include_points: bool = False) -> str:
        return json.dumps(self.to_dict(include_points), sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "length", "area", "diameter"])
            for t, L, a, d in zip(self.times, self.lengths, self.areas, self.diameters):
                wr.writerow([repr(float(t)), repr(float(L)), "" if math.isnan(a) else repr(float(a)),
                             repr(float(d))])


def _dt(X: np.ndarray, opts: FlowOptions, closed: bool = True) -> float:
    if opts.dt is not None:
        return opts.dt
    return opts.dt_factor * float(edge_lengths(X, closed).min()) ** 2


def step(X: np.ndarray, dt: float, closed: bool = True, boundary=None) -> np.ndarray:
    """One semi-implicit curve-shortening step.

    Open curves keep their endpoints at ``boundary = (first, last)``
    (default: where they are).
    """
    X = np.ascontiguousarray(X, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if len(X) < 8:
        raise ValueError("need at least 8 vertices")
    if closed:
        return _step_closed(X, dt)
    first, last = (X[0], X[-1]) if boundary is None else boundary
    return _step_open(X, dt, np.asarray(first, float), np.asarray(last, float))


def run_open(X: np.ndarray, t_end: float, dt: float, boundary: Callable[[float], tuple] | None = None
             ) -> np.ndarray:
    """Flow an open polyline to ``t_end``; ``boundary(t)`` prescribes the endpoints."""
    t = 0.0
    X = np.asarray(X, dtype=float)
    while t < t_end - 1e-15:
        h = min(dt, t_end - t)
        bnd = None if boundary is None else boundary(t + h)
        X = step(X, h, closed=False, boundary=bnd)
        t += h
    return X


def run_to_extinction(curve, opts: FlowOptions | None = None, label: str = "") -> FlowHistory:
    """Flow a closed curve until its diameter falls below ``extinction_factor`` times the
    initial one.  The remaining lifetime of the (by then nearly round) curve is
    added as ``diameter**2 / 8``, the time a circle of that diameter needs to vanish.
    """
    opts = opts or FlowOptions()
    X = curve.vertices if isinstance(curve, PolyhedralChain) else np.asarray(curve, dtype=float)
    X = resample(X, opts.n_vertices)
    planar = X.shape[1] == 2
    if planar and self_intersects(X):
        raise ValueError("initial curve is not embedded")
    d0 = diameter(X)
    stop = opts.extinction_factor * d0
    area0 = signed_area(X) if planar else None
    times, pts = [0.0], [X.copy()]
    embedded = True
    t, it = 0.0, 0
    dt_fixed = -1.0 if opts.dt is None else float(opts.dt)
    while it < opts.max_steps:
        chunk = min(opts.snapshot_every - it % opts.snapshot_every, opts.max_steps - it)
        X, t, it, done, worst = _advance(X, t, it, chunk, dt_fixed, opts.dt_factor,
                                         opts.redistribute_every, stop)
        if worst > 1e-9:
            log.warning("length increased by %.3g (relative) before t=%g", worst, t)
        if planar and embedded and self_intersects(X):
            embedded = False
            log.warning("self-intersection detected at t=%g", t)
        times.append(t)
        pts.append(X.copy())
        if done:
            d = diameter(X)
            tau = t + d * d / 8.0
            return FlowHistory(np.array(times), tuple(pts), tau, area0, embedded, label,
                               asdict(opts))
    partial = FlowHistory(np.array(times), tuple(pts), t, area0, embedded, label, asdict(opts))
    raise FlowError(f"no extinction after {opts.max_steps} steps", partial)


def scale_curve(X: np.ndarray, lam: float) -> np.ndarray:
    return lam * np.asarray(X, dtype=float)


__all__ = [
    "CURVES", "FlowError", "FlowHistory", "FlowOptions", "Snapshot", "circle", "curve_length",
    "diameter", "ellipse", "fourier_circle", "make_curve", "resample", "rounded_polygon",
    "run_open", "run_to_extinction", "saddle", "scale_curve", "self_intersects", "signed_area",
    "step",
]
