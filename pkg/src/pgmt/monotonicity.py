"""Gaussian density along flows and the two-sided extinction-time bounds."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .flow import FlowHistory

SQRT_2PI_OVER_E = math.sqrt(2 * math.pi / math.e)

# three-point Gauss-Legendre on [0, 1]; exact through degree 5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _kernel_integral(X: np.ndarray, p: np.ndarray, s: float, k: int, closed: bool = True) -> float:
    A = X
    B = np.roll(X, -1, axis=0) if closed else X[1:]
    if not closed:
        A = X[:-1]
    h = np.linalg.norm(B - A, axis=1)
    pts = A[:, None, :] + _GL_X[None, :, None] * (B - A)[:, None, :]
    r2 = ((pts - p) ** 2).sum(-1)
    vals = np.exp(-r2 / (4 * s)) @ _GL_W
    return float((4 * math.pi * s) ** (-k / 2) * np.dot(h, vals))


def gaussian_density(history: FlowHistory, p, tau0: float, t: float, k: int = 1) -> float:
    """Backward heat-kernel integral ``int (4 pi (tau0-t))^{-k/2} exp(-|x-p|^2 / 4(tau0-t))``
    over the curve at time ``t``."""
    if t >= tau0:
        raise ValueError("density needs t < tau0")
    X = history.curve_at(t)
    return _kernel_integral(X, np.asarray(p, dtype=float), tau0 - t, k)


@dataclass(frozen=True)
class GaussianDensitySeries:
    center: tuple[float, ...]
    tau0: float
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.times) >= self.tau0):
            raise ValueError("sample times must precede tau0")
        if np.any(np.asarray(self.values) < 0):
            raise ValueError("densities are nonnegative")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "theta"])
            for t, v in zip(self.times, self.values):
                wr.writerow([repr(float(t)), repr(float(v))])


def default_times(history: FlowHistory, tau0: float, count: int = 40, frac: float = 0.98) -> np.ndarray:
    """Sample times in ``[0, frac * min(tau0, last snapshot)]``."""
    top = frac * min(tau0, float(history.times[-1]))
    return np.linspace(0.0, top, count)


def density_series(history: FlowHistory, p, tau0: float, times=None, k: int = 1
                   ) -> GaussianDensitySeries:
    times = default_times(history, tau0) if times is None else np.asarray(times, dtype=float)
    vals = np.array([gaussian_density(history, p, tau0, t, k) for t in times])
    return GaussianDensitySeries(tuple(float(v) for v in np.atleast_1d(p)), float(tau0), times, vals)


@dataclass(frozen=True)
class MonotonicityReport:
    center: tuple[float, ...]
    max_increase: float
    max_relative_increase: float
    verdict: bool

    def to_dict(self) -> dict:
        return {"center": list(self.center), "max_increase": self.max_increase,
                "max_relative_increase": self.max_relative_increase, "verdict": self.verdict}


def check_monotone(series: GaussianDensitySeries, rel_tol: float = 1e-3) -> MonotonicityReport:
    """Nonincreasing up to ``rel_tol * Theta(t1)`` per consecutive pair."""
    v = np.asarray(series.values, dtype=float)
    if len(v) < 2:
        return MonotonicityReport(series.center, 0.0, 0.0, True)
    inc = np.diff(v)
    rel = inc / np.maximum(v[:-1], 1e-300)
    ok = bool(np.all(inc <= rel_tol * v[:-1]))
    return MonotonicityReport(series.center, float(max(inc.max(), 0.0)),
                              float(max(rel.max(), 0.0)), ok)


def extinction_point(history: FlowHistory) -> np.ndarray:
    """Centroid of the last stored curve."""
    return history.points[-1].mean(axis=0)


def center_grid(history: FlowHistory, spacing: float | None = None) -> list[np.ndarray]:
    """3x3 grid of centers around the extinction point (first two coordinates offset)."""
    c = extinction_point(history)
    if spacing is None:
        spacing = 0.1 * float(history.diameters[0])
    out = []
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            q = c.copy()
            q[0] += i * spacing
            q[1] += j * spacing
            out.append(q)
    return out


def extinction_upper_bound(mass0: float, k: int = 1) -> float:
    """``mass0**(2/k) / (4 pi)``."""
    if not mass0 > 0:
        raise ValueError("mass must be positive")
    return mass0 ** (2.0 / k) / (4 * math.pi)


def extinction_lower_bound(filling_mass: float, mass0: float) -> float:
    """``(filling_mass / mass0)**2``."""
    if not (filling_mass > 0 and mass0 > 0):
        raise ValueError("masses must be positive")
    return (filling_mass / mass0) ** 2


@dataclass(frozen=True)
class SqueezeReport:
    label: str
    lower: float
    tau: float
    upper: float
    one_sided: bool

    @property
    def verdict(self) -> bool:
        return self.lower <= self.tau <= self.upper

    def to_dict(self) -> dict:
        return {"label": self.label, "lower": self.lower, "tau": self.tau, "upper": self.upper,
                "one_sided": self.one_sided, "verdict": self.verdict}


def extinction_squeeze(history: FlowHistory, filling_mass: float | None = None) -> SqueezeReport:
    """Lower and upper extinction bounds against the measured time.

    For planar curves the filling is the enclosed region; otherwise the
    caller passes an upper bound on the optimal filling (e.g. the projected
    track mass) and the lower bound is marked one-sided.
    """
    mass0 = history.mass0
    one_sided = False
    if filling_mass is None:
        if not history.planar:
            raise ValueError("non-planar curves need an explicit filling mass")
        filling_mass = abs(history.area0)
    elif not history.planar:
        one_sided = True
    return SqueezeReport(history.label, extinction_lower_bound(filling_mass, mass0),
                         history.extinction_time, extinction_upper_bound(mass0, 1), one_sided)
