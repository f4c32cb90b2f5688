"""Parabolic co-area and area formulas checked on polyhedral test sets.

The parabolic side of every identity is a weighted grid content
(:mod:`pgmt.measure`); the Euclidean side integrates exactly over time
slices.  The proportionality constant between the two, ``c1(k)``, is never
assumed: it is calibrated on product boxes and every other check is phrased
as constancy of ratios.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.spatial import cKDTree

from .geometry import PolyhedralChain, grid_box_chain
from .measure import MeasureEstimate, par_content, par_content_weights, slice_at_time
from .quadrature import integrate

log = logging.getLogger(__name__)

TIME_AXIS_CONSTANT = math.pi / 4  # H^2_par = (pi/4) L^1 on the time axis
K1_LADDER = tuple(2.0**-j for j in range(3, 8))
K2_LADDER = tuple(2.0**-j for j in range(3, 6))

WeightFn = Callable[[np.ndarray], np.ndarray]

WEIGHTS: dict[str, WeightFn | None] = {
    "one": None,
    "t": lambda P: P[:, 0],
    "abs_x": lambda P: np.linalg.norm(P[:, 1:], axis=1),
}


def _eval_weight(g: WeightFn | None, P: np.ndarray) -> np.ndarray:
    return np.ones(len(P)) if g is None else np.asarray(g(P), dtype=float)


# vertical maps ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VerticalMap:
    """Time-preserving map ``F(t, x) = (t, F2(t, x))`` from a box in ``R^{1,k}`` to ``R^{1,n}``.

    ``func`` acts on ``(m, 1+k)`` arrays.  ``lipschitz_full`` (M) bounds the
    Euclidean difference quotients, ``lipschitz_horizontal`` (m) those within
    one time slice.
    """

    name: str
    k: int
    n: int
    func: Callable[[np.ndarray], np.ndarray]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    lipschitz_full: float
    lipschitz_horizontal: float
    cells: int = 1
    analytic_jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    injective: bool = True

    def __call__(self, P: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return np.asarray(self.func(P), dtype=float)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def domain(self) -> PolyhedralChain:
        return grid_box_chain(self.lower, self.upper, self.cells, time_flag=True)

    def image(self) -> PolyhedralChain:
        """Domain simplices with vertices pushed through the map."""
        D = self.domain()
        return D.with_vertices(self(D.vertices))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return lo + (hi - lo) * rng.random((count, len(lo)))

    def validate(self, count: int = 2000, seed: int = 0, slack: float = 0.05) -> dict:
        """Sampled checks of time preservation and both Lipschitz constants."""
        rng = np.random.default_rng(seed)
        P = self.sample(count, rng)
        Q = self.sample(count, rng)
        FP, FQ = self(P), self(Q)
        time_ok = bool(np.allclose(FP[:, 0], P[:, 0], rtol=0, atol=1e-12))
        full = np.linalg.norm(FP - FQ, axis=1) / np.linalg.norm(P - Q, axis=1)
        Qh = Q.copy()
        Qh[:, 0] = P[:, 0]
        FQh = self(Qh)
        dx = np.linalg.norm(P[:, 1:] - Qh[:, 1:], axis=1)
        ok = dx > 0
        horiz = np.linalg.norm(FP[ok] - FQh[ok], axis=1) / dx[ok]
        return {
            "time_preserved": time_ok,
            "max_full_quotient": float(full.max()),
            "max_horizontal_quotient": float(horiz.max()),
            "full_ok": bool(full.max() <= self.lipschitz_full * (1 + slack)),
            "horizontal_ok": bool(horiz.max() <= self.lipschitz_horizontal * (1 + slack)),
        }


def horizontal_jacobians(F: VerticalMap, P: np.ndarray, h: float | None = None) -> np.ndarray:
    """``sqrt(det(D^T D))`` of the spatial differential at fixed time, by central differences."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    h = 1e-4 * F.diameter if h is None else h
    lo, hi = np.asarray(F.lower), np.asarray(F.upper)
    inner = (P[:, 1:] - h >= lo[1:] - 1e-15) & (P[:, 1:] + h <= hi[1:] + 1e-15)
    if not np.all(inner):
        raise ValueError("point too close to the domain boundary for the difference stencil")
    cols = []
    for i in range(F.k):
        e = np.zeros(F.k + 1)
        e[i + 1] = h
        cols.append((F(P + e)[:, 1:] - F(P - e)[:, 1:]) / (2 * h))
    D = np.stack(cols, axis=-1)  # (m, n, k)
    G = np.einsum("mni,mnj->mij", D, D)
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None))


def horizontal_jacobian(F: VerticalMap, p, h: float | None = None) -> float:
    return float(horizontal_jacobians(F, np.asarray(p, dtype=float)[None], h)[0])


def _rot2(a: float) -> np.ndarray:
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def _linear(A: np.ndarray, v=None) -> Callable[[np.ndarray], np.ndarray]:
    A = np.asarray(A, dtype=float)
    v = np.zeros(A.shape[0]) if v is None else np.asarray(v, dtype=float)

    def f(P):
        return np.column_stack([P[:, 0], P[:, 1:] @ A.T + P[:, :1] * v])
    return f


def _rotating(omega: float):
    def f(P):
        c, s = np.cos(omega * P[:, 0]), np.sin(omega * P[:, 0])
        x, y = P[:, 1], P[:, 2]
        return np.column_stack([P[:, 0], c * x - s * y, s * x + c * y])
    return f


def _graph(P):
    return np.column_stack([P[:, 0], P[:, 1], P[:, 0] * P[:, 1]])


def _fold(P):
    return np.column_stack([P[:, 0], P[:, 1] ** 2])


def _max_singular(f, lower, upper, samples: int = 4000, seed: int = 1) -> float:
    """Largest singular value of the full differential over sampled points."""
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    P = lo + (hi - lo) * rng.random((samples, len(lo)))
    h = 1e-6
    cols = []
    for i in range(len(lo)):
        e = np.zeros(len(lo))
        e[i] = h
        cols.append((f(P + e) - f(P - e)) / (2 * h))
    D = np.stack(cols, axis=-1)
    return float(np.linalg.norm(D, ord=2, axis=(1, 2)).max())


def _make_registry() -> dict[str, VerticalMap]:
    maps = {}
    box1 = ((0.0, 0.0), (1.0, 1.0))
    box2 = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    v = 0.5
    shear = np.array([[1.0]])
    specs = [
        ("identity", 1, 1, _linear(np.eye(1)), box1, 1.0, 1.0, 1, lambda P: np.ones(len(P))),
        ("dilation", 1, 1, _linear(2 * np.eye(1)), box1, 2.0, 2.0, 1, lambda P: np.full(len(P), 2.0)),
        ("shear", 1, 1, _linear(shear, [v]), box1, abs(v) + 1, 1.0, 1, lambda P: np.ones(len(P))),
        ("isometry", 2, 2, _linear(_rot2(0.6)), box2, 1.0, 1.0, 1, lambda P: np.ones(len(P))),
        ("diag22", 2, 2, _linear(np.diag([2.0, 2.0])), box2, 2.0, 2.0, 1,
         lambda P: np.full(len(P), 4.0)),
        ("diag23", 2, 2, _linear(np.diag([2.0, 3.0])), box2, 3.0, 3.0, 1,
         lambda P: np.full(len(P), 6.0)),
        ("rotating", 2, 2, _rotating(1.0), box2, None, 1.0, 8, lambda P: np.ones(len(P))),
        ("graph", 1, 2, _graph, box1, None, math.sqrt(2.0), 16,
         lambda P: np.sqrt(1 + P[:, 0] ** 2)),
    ]
    for name, k, n, f, (lo, hi), M, m, cells, jac in specs:
        if M is None:
            M = _max_singular(f, lo, hi)
        maps[name] = VerticalMap(name, k, n, f, lo, hi, M, m, cells, jac)
    maps["fold"] = VerticalMap("fold", 1, 1, _fold, (0.0, -1.0), (1.0, 1.0), 2.0, 2.0, 8,
                               lambda P: 2 * np.abs(P[:, 1]), injective=False)
    return maps


MAPS: dict[str, VerticalMap] = _make_registry()
INJECTIVE_MAPS = tuple(k for k, F in MAPS.items() if F.injective)


def check_injective(F: VerticalMap, count: int = 4000, seed: int = 0) -> bool:
    """Sampled collision test: distinct domain points must have distinct images."""
    rng = np.random.default_rng(seed)
    P = F.sample(count, rng)
    # mirror pairs expose folds that random sampling would rarely hit
    mid = 0.5 * (np.asarray(F.lower) + np.asarray(F.upper))
    R = P.copy()
    R[:, 1:] = 2 * mid[1:] - P[:, 1:]
    P = np.vstack([P, R])
    img = F(P)
    tol = 1e-9 * max(F.diameter, 1.0)
    pairs = cKDTree(img).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return True
    gaps = np.linalg.norm(P[pairs[:, 0]] - P[pairs[:, 1]], axis=1)
    return bool(np.all(gaps <= 1e3 * tol))


# co-area ------------------------------------------------------------------------

def coarea_lhs_many(Mset: PolyhedralChain, weights: Sequence[WeightFn | None], ladder=None,
                    ambient: int | None = None) -> list[MeasureEstimate]:
    k = Mset.dim - 1
    if ladder is None:
        ladder = K1_LADDER if k == 1 else K2_LADDER
    return par_content_weights(Mset, k + 2, list(weights), ladder, ambient=ambient)


def coarea_lhs(Mset: PolyhedralChain, g: WeightFn | None = None, ladder=None,
               ambient: int | None = None) -> MeasureEstimate:
    """Weighted parabolic content ``int_M g dH^{k+2}_par`` (grid estimate)."""
    return coarea_lhs_many(Mset, [g], ladder, ambient)[0]


def coarea_rhs(Mset: PolyhedralChain, g: WeightFn | None = None, n_t: int = 257,
               degree: int = 5) -> float:
    """``(pi/4) int (int_{M_t} g dH^k) dt`` with composite Simpson in time and exact
    simplex quadrature on each slice."""
    if Mset.is_empty():
        return 0.0
    t0, t1 = Mset.time_extent()
    if t1 <= t0:
        return 0.0
    if n_t % 2 == 0:
        n_t += 1
    ts = np.linspace(t0, t1, n_t)
    vals = np.empty(n_t)
    for i, t in enumerate(ts):
        sl = slice_at_time(Mset, t)
        if sl.is_empty():
            vals[i] = 0.0
            continue
        vals[i] = integrate(sl, lambda X, t=t: _eval_weight(g, np.column_stack([np.full(len(X), t), X])),
                            degree)
    return TIME_AXIS_CONSTANT * float(simpson(vals, x=ts))


@dataclass(frozen=True)
class CoareaReport:
    set_name: str
    weight_name: str
    lhs: float
    rhs: float
    estimate: MeasureEstimate | None = None

    @property
    def degenerate(self) -> bool:
        return self.rhs == 0.0

    @property
    def ratio(self) -> float:
        return math.nan if self.degenerate else self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {"check": "coarea", "set": self.set_name, "weight": self.weight_name,
                "lhs": self.lhs, "rhs": self.rhs,
                "ratio": None if self.degenerate else self.ratio,
                "degenerate": self.degenerate,
                "ladder": self.estimate.to_dict()["ladder"] if self.estimate else None}


def coarea_ratio(Mset: PolyhedralChain, g: WeightFn | None = None, ladder=None,
                 ambient: int | None = None, name: str = "", weight_name: str = "") -> CoareaReport:
    """Empirical ``c1(k)``; a zero right-hand side is reported as degenerate."""
    est = coarea_lhs(Mset, g, ladder, ambient)
    rhs = coarea_rhs(Mset, g)
    return CoareaReport(name, weight_name, est.extrapolated, rhs, est)


def coarea_matrix(sets: dict[str, PolyhedralChain], weights: dict[str, WeightFn | None] | None = None,
                  ladder=None, ambient: int | None = None) -> list[CoareaReport]:
    weights = WEIGHTS if weights is None else weights
    out = []
    for sname, M in sets.items():
        ests = coarea_lhs_many(M, list(weights.values()), ladder, ambient)
        for (wname, g), est in zip(weights.items(), ests):
            out.append(CoareaReport(sname, wname, est.extrapolated, coarea_rhs(M, g), est))
            log.info("coarea %s/%s ratio %.4f", sname, wname, out[-1].ratio)
    return out


def relative_spread(values: Sequence[float]) -> float:
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    return float((v.max() - v.min()) / v.mean())


# calibration --------------------------------------------------------------------

def _rotate_spatial(chain: PolyhedralChain, angle: float, shift=(0.0, 0.0)) -> PolyhedralChain:
    V = np.array(chain.vertices)
    V[:, 1:3] = V[:, 1:3] @ _rot2(angle).T + np.asarray(shift)
    return chain.with_vertices(V)


CALIBRATION_BOXES = {
    1: [(1.0, 1.0, 0.0), (0.5, 2.0, 0.3), (2.0, 0.5, 1.0), (0.25, 1.5, 0.7), (1.5, 0.75, 2.0)],
    2: [(1.0, 1.0, 0.0), (0.5, 1.4, 0.3), (1.5, 0.8, 1.0), (0.25, 1.2, 0.7), (2.0, 0.7, 2.0)],
}


def calibration_box(k: int, T: float, L: float, angle: float) -> PolyhedralChain:
    """Product ``[0,T] x [0,L]^k`` in ``R^{1,2}``, spatially rotated by ``angle``."""
    if k not in (1, 2):
        raise ValueError("calibration boxes exist for k = 1, 2")
    upper = [T, L, L if k == 2 else 0.0]
    return _rotate_spatial(grid_box_chain([0, 0, 0], upper, 1), angle)


@dataclass(frozen=True)
class Calibration:
    k: int
    ambient: int
    boxes: list = field(default_factory=list)   # (T, L, angle, c1)
    ladder: tuple = ()

    @property
    def values(self) -> np.ndarray:
        return np.array([b[3] for b in self.boxes])

    @property
    def c1(self) -> float:
        return float(self.values.mean())

    @property
    def spread(self) -> float:
        return relative_spread(self.values)

    def to_dict(self) -> dict:
        return {"k": self.k, "ambient": self.ambient, "c1": self.c1, "spread": self.spread,
                "ladder": list(self.ladder),
                "boxes": [{"T": T, "L": L, "angle": a, "c1": c} for T, L, a, c in self.boxes]}


def calibrate_c1(k: int = 1, ladder=None, boxes=None) -> Calibration:
    """Measure ``c1(k) = content / ((pi/4) T L^k)`` on product boxes in ``R^{1,2}``."""
    ladder = tuple(ladder or (K1_LADDER if k == 1 else K2_LADDER))
    boxes = CALIBRATION_BOXES[k] if boxes is None else boxes
    out = []
    for T, L, ang in boxes:
        est = par_content(calibration_box(k, T, L, ang), k + 2, ladder)
        c1 = est.extrapolated / (TIME_AXIS_CONSTANT * T * L**k)
        out.append((T, L, ang, c1))
        log.info("calibration k=%d box T=%g L=%g: c1=%.5f", k, T, L, c1)
    return Calibration(k, 2, out, ladder)


# the k = 1 test-set suite -----------------------------------------------------------

def static_cylinder(radius: float = 0.5, T: float = 1.0, N: int = 128, layers: int = 4) -> PolyhedralChain:
    th = np.linspace(0, 2 * np.pi, N, endpoint=False)
    P = radius * np.column_stack([np.cos(th), np.sin(th)])
    ts = np.linspace(0.0, T, layers + 1)
    tris = []
    for a, b in zip(ts[:-1], ts[1:]):
        A = np.column_stack([np.full(N, a), P])
        B = np.column_stack([np.full(N, a), np.roll(P, -1, 0)])
        C = np.column_stack([np.full(N, b), P])
        D = np.column_stack([np.full(N, b), np.roll(P, -1, 0)])
        tris += [np.stack([A, B, C], 1), np.stack([B, D, C], 1)]
    return PolyhedralChain.from_coords(np.concatenate(tris), time_flag=True)


def k1_test_sets(circle_track: PolyhedralChain | None = None) -> dict[str, PolyhedralChain]:
    """Product boxes, vertical graphs, a static cylinder and (optionally) a flow track, in ``R^{1,2}``."""
    sets = {
        "box_a": _rotate_spatial(grid_box_chain([0, 0, 0], [1.0, 1.0, 0.0], 1), 0.3, (0.2, 0.1)),
        "box_b": _rotate_spatial(grid_box_chain([0, 0, 0], [0.5, 1.5, 0.0], 1), 1.1, (-0.4, 0.3)),
        "graph": MAPS["graph"].image(),
        "tilted": VerticalMap("tilted", 1, 2, _linear(np.array([[0.8], [0.6]]), [0.5, 0.25]),
                              (0.0, 0.0), (1.0, 1.0), 2.0, 1.0).image(),
        "cylinder": static_cylinder(),
    }
    if circle_track is not None:
        sets["circle_track"] = circle_track
    return sets


# area formula and volume estimate --------------------------------------------------

def _domain_weight(F: VerticalMap, g: WeightFn | None, ambient: int) -> WeightFn:
    lo, hi = np.asarray(F.lower), np.asarray(F.upper)
    h = 1e-4 * F.diameter
    margin = np.concatenate([[0.0], np.full(F.k, 1.001 * h)])

    def weight(C):
        # cell centres sit within a cell of the embedded domain; project back onto it
        P = np.clip(C[:, : F.k + 1], lo + margin, hi - margin)
        J = horizontal_jacobians(F, P, h)
        return J * _eval_weight(g, F(P))
    return weight


@dataclass(frozen=True)
class AreaFormulaReport:
    map_name: str
    lhs: float
    rhs: float
    ladder: tuple

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs

    @property
    def verdict(self) -> bool:
        return 0.95 <= self.ratio <= 1.05

    def to_dict(self) -> dict:
        return {"check": "area_formula", "map": self.map_name, "lhs": self.lhs, "rhs": self.rhs,
                "ratio": self.ratio, "ladder": list(self.ladder), "verdict": self.verdict}


def area_formula_check(F: VerticalMap, g: WeightFn | None = None, ladder=None) -> AreaFormulaReport:
    """``int_A J^h F (g o F) dH^{k+2}_par`` against ``int_{F(A)} g dH^{k+2}_par``."""
    if not F.injective or not check_injective(F):
        raise ValueError(f"map {F.name!r} is not injective; multiplicity counting is not supported")
    ladder = tuple(ladder or (K1_LADDER if F.k == 1 else K2_LADDER))
    amb = max(F.n, F.k)
    lhs = par_content(F.domain(), F.k + 2, ladder, _domain_weight(F, g, amb), ambient=amb)
    rhs = par_content(F.image(), F.k + 2, ladder, g, ambient=amb)
    return AreaFormulaReport(F.name, lhs.extrapolated, rhs.extrapolated, ladder)


@dataclass(frozen=True)
class VolumeEstimateReport:
    map_name: str
    image_content: float
    domain_content: float
    factor: float
    tol: float
    ladder: tuple

    @property
    def lhs(self) -> float:
        return self.image_content

    @property
    def rhs(self) -> float:
        return self.factor * self.domain_content

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + self.tol)

    @property
    def tight(self) -> bool:
        """Equality within tolerance (expected when the horizontal constant is one)."""
        return abs(self.lhs / self.rhs - 1) <= self.tol

    def to_dict(self) -> dict:
        return {"check": "volume_estimate", "map": self.map_name, "lhs": self.lhs, "rhs": self.rhs,
                "ratio_to_domain": self.image_content / self.domain_content,
                "factor": self.factor, "holds": self.holds, "tight": self.tight,
                "ladder": list(self.ladder), "verdict": self.holds}


def volume_estimate_check(F: VerticalMap, ladder=None, tol: float = 0.02) -> VolumeEstimateReport:
    """Image content against ``max(m^k, m^{k+2})`` times domain content."""
    ladder = tuple(ladder or (K1_LADDER if F.k == 1 else K2_LADDER))
    amb = max(F.n, F.k)
    img = par_content(F.image(), F.k + 2, ladder, ambient=amb).extrapolated
    dom = par_content(F.domain(), F.k + 2, ladder, ambient=amb).extrapolated
    m = F.lipschitz_horizontal
    return VolumeEstimateReport(F.name, img, dom, max(m**F.k, m ** (F.k + 2)), tol, ladder)
