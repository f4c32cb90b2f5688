"""Space-time tracks lofted from flow histories, their spatial shadows and the
mass and parabolic-measure inequalities they satisfy.

Tracks are oriented as (curve direction, time direction), which makes the
boundary of a track from ``t = 0`` to extinction equal to the initial curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .flow import FlowHistory
from .geometry import PolyhedralChain, chain_boundary, chains_equal, reduce_chain
from .measure import MeasureEstimate, drop_time, par_content, restrict_time


@dataclass(frozen=True, eq=False)
class SpaceTimeTrack:
    chain: PolyhedralChain
    time_extent: tuple[float, float]
    source: FlowHistory | None = None
    capped: bool = False

    @property
    def k(self) -> int:
        return self.chain.dim - 1

    def mass(self) -> float:
        return self.chain.mass()

    def initial_chain(self) -> PolyhedralChain:
        if self.source is None:
            raise ValueError("track has no source history")
        return self.source.chain(0)


def _strip(t0: float, t1: float, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Two triangles per edge between corresponding closed curves ``P`` at ``t0`` and ``Q`` at ``t1``."""
    N = len(P)
    a = np.column_stack([np.full(N, t0), P])
    b = np.column_stack([np.full(N, t0), np.roll(P, -1, axis=0)])
    c = np.column_stack([np.full(N, t1), Q])
    d = np.column_stack([np.full(N, t1), np.roll(Q, -1, axis=0)])
    lower = np.stack([a, b, c], axis=1)
    upper = np.stack([b, d, c], axis=1)
    return np.concatenate([lower, upper])


def build_track(history: FlowHistory, cap: bool = True) -> SpaceTimeTrack:
    """Loft ruled strips between consecutive snapshots.

    With ``cap`` the last curve is coned off to its centroid at the
    extinction time, closing the track so that its boundary is the initial
    curve alone.
    """
    times, pts = history.times, history.points
    n = history.n
    if len(times) < 2:
        t0 = float(times[0]) if len(times) else 0.0
        return SpaceTimeTrack(PolyhedralChain.empty(2, n + 1, True), (t0, t0), history, False)
    N = len(pts[0])
    if any(len(P) != N for P in pts):
        raise ValueError("snapshots do not share a vertex correspondence")
    tris = [_strip(times[i], times[i + 1], pts[i], pts[i + 1]) for i in range(len(times) - 1)]
    top = float(times[-1])
    if cap and history.extinction_time > top:
        P = pts[-1]
        apex = np.concatenate([[history.extinction_time], P.mean(axis=0)])
        a = np.column_stack([np.full(N, top), P])
        b = np.column_stack([np.full(N, top), np.roll(P, -1, axis=0)])
        tris.append(np.stack([a, b, np.broadcast_to(apex, a.shape)], axis=1))
        top = history.extinction_time
    else:
        cap = False
    chain = PolyhedralChain.from_coords(np.concatenate(tris), time_flag=True, drop_degenerate=True)
    return SpaceTimeTrack(chain, (float(times[0]), top), history, cap)


@dataclass(frozen=True)
class Projection:
    chain: PolyhedralChain
    mass: float        # after exact cancellation of coincident simplices
    swept: float       # sum of projected areas with multiplicity, no cancellation
    interval: tuple[float, float]


def project_spatial(track: SpaceTimeTrack, interval: tuple[float, float] | None = None) -> Projection:
    """Shadow ``(pi_x)#(T_B)`` of the track restricted to ``B = interval``."""
    a, b = track.time_extent if interval is None else interval
    lo, hi = track.time_extent
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError("interval must lie inside the track's time extent")
    n = track.chain.n_space
    if b <= a or track.chain.is_empty():
        empty = PolyhedralChain.empty(track.chain.dim, n)
        return Projection(empty, 0.0, 0.0, (a, b))
    TB = track.chain if (a <= lo and b >= hi) else restrict_time(track.chain, a, b)
    S = drop_time(TB)
    swept = S.mass()
    reduced = reduce_chain(S) if not S.is_empty() else S
    return Projection(reduced, reduced.mass(), swept, (a, b))


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    tol: float = 1e-9
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return self.lhs <= self.rhs * (1 + self.tol) + 1e-15

    def to_dict(self) -> dict:
        return {"check": self.name, "lhs": self.lhs, "rhs": self.rhs, "tol": self.tol,
                "verdict": self.verdict, **self.extra}


def check_projection_estimates(track: SpaceTimeTrack, interval: tuple[float, float],
                               tol: float = 1e-9) -> tuple[InequalityCheck, InequalityCheck]:
    """Shadow mass ``<= |B|^{1/2} M[T0]`` and track mass ``M[T_B] <= (|B| + |B|^{1/2}) M[T0]``.

    The shadow side uses the swept area, an upper bound for the cancelled mass.
    """
    a, b = interval
    width = max(b - a, 0.0)
    m0 = track.initial_chain().mass()
    proj = project_spatial(track, interval)
    if width > 0:
        TB = restrict_time(track.chain, a, b)
        mass_TB = TB.mass()
    else:
        mass_TB = 0.0
    area_chk = InequalityCheck("projected_area", proj.swept, math.sqrt(width) * m0, tol,
                               {"interval": [a, b], "cancelled_mass": proj.mass})
    mass_chk = InequalityCheck("track_mass", mass_TB, (width + math.sqrt(width)) * m0, tol,
                               {"interval": [a, b]})
    return area_chk, mass_chk


def check_theorem_B(track: SpaceTimeTrack, tol: float = 1e-9) -> InequalityCheck:
    """Shadow of the whole track against ``M[T0]^2 / sqrt(4 pi)``; also verifies ``dS = T0``."""
    T0 = track.initial_chain()
    proj = project_spatial(track)
    m0 = T0.mass()
    if proj.chain.is_empty():
        boundary_ok = T0.is_empty()
    else:
        boundary_ok = chains_equal(reduce_chain(chain_boundary(proj.chain)), reduce_chain(T0))
    return InequalityCheck("theorem_B", proj.swept, m0 * m0 / math.sqrt(4 * math.pi), tol,
                           {"boundary_is_T0": bool(boundary_ok), "cancelled_mass": proj.mass})


def slice_mass_integral(history: FlowHistory) -> float:
    """``int_0^tau M[T_t] dt`` by the trapezoid rule over snapshots, closed off linearly
    to zero length at extinction."""
    t = np.append(history.times, history.extinction_time)
    L = np.append(history.lengths, 0.0)
    return float(trapezoid(L, t))


@dataclass(frozen=True)
class TheoremCReport:
    mu: float
    estimate: MeasureEstimate
    mass0: float
    empirical_C: float
    route_D: float | None
    c1: float | None
    agreement: float | None
    bound: float | None

    @property
    def verdict(self) -> bool:
        ok = True
        if self.bound is not None:
            ok &= self.mu <= self.bound
        if self.agreement is not None:
            ok &= abs(self.agreement - 1.0) < 0.10
        return bool(ok)

    def to_dict(self) -> dict:
        return {"check": "theorem_C", "mu": self.mu, "mass0": self.mass0,
                "empirical_C": self.empirical_C, "route_D": self.route_D, "c1": self.c1,
                "agreement": self.agreement, "bound": self.bound, "verdict": self.verdict,
                "estimate": self.estimate.to_dict()}


def check_theorem_C(track: SpaceTimeTrack, c1: float | None = None, ladder=None,
                    ambient: int | None = 2) -> TheoremCReport:
    """Parabolic measure of the track against the mass-integral route and the bound.

    ``mu`` is the multiplicity-weighted grid content at ``s = k + 2``.  With a
    calibrated ``c1`` the route ``c1 * (pi/4) * int M[T_t] dt`` is compared and
    the bound ``mu <= (c1/16) M[T0]^3`` (k = 1) follows from combining it with
    the extinction upper bound.
    """
    k = track.k
    est = par_content(track.chain, k + 2, ladder, ambient=ambient)
    mu = est.extrapolated
    m0 = track.initial_chain().mass() if track.source is not None else 0.0
    emp = mu / m0 ** ((k + 2) / k) if m0 > 0 else 0.0
    route = agreement = bound = None
    if c1 is not None and track.source is not None:
        route = c1 * (math.pi / 4) * slice_mass_integral(track.source)
        agreement = mu / route if route > 0 else None
        if k == 1:
            bound = c1 / 16.0 * m0**3
    return TheoremCReport(mu, est, m0, emp, route, c1, agreement, bound)
