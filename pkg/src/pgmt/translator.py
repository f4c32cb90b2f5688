"""Rotationally symmetric translators of the elliptic-regularization functional.

A minimizer of ``I^eps[Q] = (1/eps) int exp(-z/eps) dH^k`` spanning a circle
of radius ``r0`` at ``z = 0`` is a cap over the disc that translates with
velocity ``-e_z/eps``.  Written as a graph ``z = u(r)`` with the tip at
``r = 0`` the Euler-Lagrange equation is

    u'' = -(1 + u'^2) (1/eps + u'/r),

with the regular tip expansion ``u = h - r^2/(4 eps) - r^4/(128 eps^3) + ...``.
The tip height ``h`` is found by shooting.  Under ``t = eps z`` the slices
of the cap approximate the shrinking circle ``sqrt(r0^2 - 2t)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .geometry import PolyhedralChain
from .quadrature import integrate, integrate_exp_affine_segments

RTOL = 1e-12
ATOL = 1e-14


def i_eps_functional(chain: PolyhedralChain, eps: float, degree: int = 5) -> float:
    """``(1/eps) int exp(-z/eps)`` against Euclidean k-volume; ``z`` is coordinate 0.

    Segments are integrated exactly (the weight is the exponential of an
    affine function); higher simplices use the Gauss rule of ``degree``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not chain.time_flag:
        raise ValueError("chain must carry the z (time) coordinate")
    if chain.is_empty():
        return 0.0
    if chain.dim == 1:
        X = chain.simplex_coords()
        per = integrate_exp_affine_segments(-X[:, 0, 0] / eps, -X[:, 1, 0] / eps, chain.volumes())
        return float(np.dot(np.abs(chain.mult), per) / eps)
    return integrate(chain, lambda P: np.exp(-P[:, 0] / eps) / eps, degree)


def _rhs(eps: float):
    def f(r, y):
        p = y[1]
        return [p, -(1.0 + p * p) * (1.0 / eps + p / r)]
    return f


def _tip(r: float, eps: float, h: float) -> tuple[float, float]:
    u = h - r * r / (4 * eps) - r**4 / (128 * eps**3)
    du = -r / (2 * eps) - r**3 / (32 * eps**3)
    return u, du


def _shoot(eps: float, h: float, r_end: float, r_start: float):
    """Integrate from the tip series at ``r_start`` out to ``r_end``."""
    sol = solve_ivp(_rhs(eps), (r_start, r_end), list(_tip(r_start, eps, h)), method="DOP853",
                    rtol=RTOL, atol=ATOL, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"profile integration failed: {sol.message}")
    return sol


def _boundary_radius(eps: float, h: float, r_max: float, r_start: float) -> float:
    """Radius where the shot profile of tip height ``h`` meets ``z = 0`` (``inf`` if beyond ``r_max``)."""
    def crossing(r, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1
    sol = solve_ivp(_rhs(eps), (r_start, r_max), list(_tip(r_start, eps, h)), method="DOP853",
                    rtol=RTOL, atol=ATOL, events=crossing)
    if len(sol.t_events[0]):
        return float(sol.t_events[0][0])
    return math.inf


@dataclass(frozen=True, eq=False)
class TranslatorProfile:
    """Cap ``z = u(r)`` over the disc of radius ``r0`` with ``u(r0) = 0`` and tip height ``h``.

    ``grid`` holds increasing heights from 0 to ``h``, ``r`` the matching
    (decreasing) radii.
    """

    epsilon: float
    r0: float
    height: float
    grid: np.ndarray
    r: np.ndarray
    r_start: float
    solution: object = field(repr=False, default=None)

    def u(self, r) -> np.ndarray:
        """Height at radius ``r`` (tip series inside ``r_start``)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r < self.r_start
        out[inner] = _tip(r[inner], self.epsilon, self.height)[0] if inner.any() else 0.0
        if (~inner).any():
            out[~inner] = self.solution.sol(r[~inner])[0]
        return out

    def du(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r < self.r_start
        out[inner] = _tip(r[inner], self.epsilon, self.height)[1] if inner.any() else 0.0
        if (~inner).any():
            out[~inner] = self.solution.sol(r[~inner])[1]
        return out

    @property
    def scaled_height(self) -> float:
        """``h * eps``; tends to ``r0^2 / 2`` when the slices follow the shrinking circle."""
        return self.height * self.epsilon

    def surface_chain(self, n_r: int = 64, n_theta: int = 64) -> PolyhedralChain:
        """Inscribed triangulated surface of revolution in ``R^{1,2}`` (z first)."""
        s = np.linspace(0.0, 1.0, n_r + 1)
        rr = self.r0 * np.sin(0.5 * np.pi * s)      # cluster rings near the boundary
        zz = self.u(rr)
        th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        c, sn = np.cos(th), np.sin(th)
        ring = lambda i: np.column_stack([np.full(n_theta, zz[i]), rr[i] * c, rr[i] * sn])
        tris = []
        apex = np.array([zz[0], 0.0, 0.0])
        R1 = ring(1)
        tris.append(np.stack([np.broadcast_to(apex, R1.shape), R1, np.roll(R1, -1, 0)], 1))
        for i in range(1, n_r):
            A, B = ring(i), ring(i + 1)
            A1, B1 = np.roll(A, -1, 0), np.roll(B, -1, 0)
            tris += [np.stack([A, B, B1], 1), np.stack([A, B1, A1], 1)]
        return PolyhedralChain.from_coords(np.concatenate(tris), time_flag=True, drop_degenerate=True)

    def i_eps(self, n_r: int = 64, n_theta: int = 64) -> float:
        return i_eps_functional(self.surface_chain(n_r, n_theta), self.epsilon)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["z", "r"])
            for z, r in zip(self.grid, self.r):
                wr.writerow([repr(float(z)), repr(float(r))])


def disc_i_eps(r0: float, eps: float) -> float:
    """``I^eps`` of the flat disc at ``z = 0``."""
    return math.pi * r0 * r0 / eps


def solve_profile(r0: float, eps: float, n_grid: int = 2001, tol: float = 1e-12) -> TranslatorProfile:
    """Shoot from the tip and bisect on the tip height until the profile meets ``z = 0`` at ``r0``."""
    if r0 <= 0 or eps <= 0:
        raise ValueError("r0 and eps must be positive")
    if eps > r0 / 4:
        raise ValueError(f"eps={eps} exceeds r0/4; the cap regime needs eps <= r0/4")
    r_start = 1e-4 * eps
    r_max = 4.0 * r0

    def miss(h):
        return _boundary_radius(eps, h, r_max, r_start) - r0

    lo, hi = 1e-6 * r0 * r0 / eps, r0 * r0 / eps
    if miss(lo) >= 0:
        raise ValueError("no bracketing tip height found")
    for _ in range(60):
        if miss(hi) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ValueError("no bracketing tip height found (eps too large)")
    h = brentq(miss, lo, hi, xtol=tol * r0 * r0 / eps, rtol=4 * np.finfo(float).eps, maxiter=200)
    sol = _shoot(eps, h, 1.05 * r0, r_start)
    s = np.linspace(0.0, 1.0, n_grid)
    rr = r0 * np.sin(0.5 * np.pi * s)
    prof = TranslatorProfile(eps, r0, h, np.empty(0), np.empty(0), r_start, sol)
    zz = prof.u(rr)
    if abs(prof.u(np.array([r0]))[0]) > 1e-8 * max(r0, 1.0):
        raise RuntimeError("shooting did not reach the boundary circle")
    return TranslatorProfile(eps, r0, h, zz[::-1].copy(), rr[::-1].copy(), r_start, sol)


# residuals -------------------------------------------------------------------------

def _second_derivative(du, x: np.ndarray, step: float) -> np.ndarray:
    """Five-point central difference of the first derivative."""
    return (-du(x + 2 * step) + 8 * du(x + step) - 8 * du(x - step) + du(x - 2 * step)) / (12 * step)


def el_residual(profile: TranslatorProfile, n: int = 4001, step: float | None = None) -> float:
    """Sup norm of ``H + <nu, e_z>/eps`` along the cap, with ``u''`` from discrete differences.

    ``H = u''/W^3 + u'/(r W)`` is the mean curvature of the surface of
    revolution and ``W = sqrt(1 + u'^2)``.
    """
    eps, r0 = profile.epsilon, profile.r0
    step = 1e-3 * min(eps, r0) if step is None else step
    r = np.linspace(profile.r_start + 2 * step, r0, n)
    p = profile.du(r)
    upp = _second_derivative(profile.du, r, step)
    W = np.sqrt(1 + p * p)
    return float(np.max(np.abs(upp / W**3 + p / (r * W) + 1 / (eps * W))))


def grim_reaper(eps: float):
    """Closed-form translating curve ``z = eps log cos(x/eps)`` and its slope."""
    return (lambda x: eps * np.log(np.cos(x / eps)),
            lambda x: -np.tan(x / eps))


def grim_reaper_residual(eps: float, margin: float = 0.3, n: int = 2001,
                         step: float | None = None, sign: float = 1.0) -> float:
    """Sup norm of the curve equation ``u''/W^3 + 1/(eps W)`` on ``z = sign * eps log cos(x/eps)``."""
    step = 1e-3 * eps if step is None else step
    half = eps * (0.5 * math.pi - margin)
    x = np.linspace(-half, half, n)
    _, du0 = grim_reaper(eps)
    du = lambda y: sign * du0(y)
    p = du(x)
    upp = _second_derivative(du, x, step)
    W = np.sqrt(1 + p * p)
    return float(np.max(np.abs(upp / W**3 + 1 / (eps * W))))


# rescaling ---------------------------------------------------------------------------

def rescaled_slices(profile: TranslatorProfile) -> tuple[np.ndarray, np.ndarray]:
    """``(eps z, r(z))``: time and radius of the slices of ``kappa_eps # P^eps``."""
    return profile.epsilon * profile.grid, profile.r.copy()


def slice_radius(profile: TranslatorProfile, t) -> np.ndarray:
    """Slice radius at time ``t``; zero past ``eps * h``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    eps, h, r0 = profile.epsilon, profile.height, profile.r0
    out = np.zeros_like(t)
    for i, ti in enumerate(t):
        z = ti / eps
        if z <= 0:
            out[i] = r0
        elif z < h:
            out[i] = brentq(lambda r: profile.u(np.array([r]))[0] - z, 0.0, r0, xtol=1e-14)
    return out


@dataclass(frozen=True)
class SliceComparison:
    epsilon: float
    times: np.ndarray
    radius: np.ndarray
    exact: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return np.abs(self.radius - self.exact)

    @property
    def sup_error(self) -> float:
        return float(self.error.max())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "r_eps", "r_exact", "error"])
            for row in zip(self.times, self.radius, self.exact, self.error):
                wr.writerow([repr(float(v)) for v in row])


def compare_slices(profile: TranslatorProfile, n: int = 801) -> SliceComparison:
    """Slice radii against the shrinking circle ``sqrt(r0^2 - 2t)`` on ``[0, max(r0^2/2, eps h)]``."""
    r0 = profile.r0
    top = max(0.5 * r0 * r0, profile.scaled_height)
    t = np.linspace(0.0, top, n)
    t = np.union1d(t, [0.5 * r0 * r0, profile.scaled_height])
    exact = np.sqrt(np.clip(r0 * r0 - 2 * t, 0.0, None))
    return SliceComparison(profile.epsilon, t, slice_radius(profile, t), exact)


@dataclass(frozen=True)
class ConvergenceReport:
    r0: float
    epsilons: tuple
    sup_errors: tuple
    scaled_heights: tuple
    residuals: tuple
    i_eps: tuple
    disc: tuple

    @property
    def factors(self) -> tuple:
        e = self.sup_errors
        return tuple(e[i] / e[i + 1] for i in range(len(e) - 1))

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.sup_errors, self.sup_errors[1:]))

    @property
    def rate(self) -> float:
        """Least-squares slope of log error against log eps."""
        return float(np.polyfit(np.log(self.epsilons), np.log(self.sup_errors), 1)[0])

    def to_dict(self) -> dict:
        return {"check": "translator_convergence", "r0": self.r0, "epsilons": list(self.epsilons),
                "sup_errors": list(self.sup_errors), "factors": list(self.factors),
                "rate": self.rate, "h_times_eps": list(self.scaled_heights),
                "extinction_limit": 0.5 * self.r0**2,
                "el_residuals": list(self.residuals), "i_eps": list(self.i_eps),
                "i_eps_disc": list(self.disc), "monotone": self.monotone,
                "verdict": self.monotone and max(self.residuals) < 1e-6
                and all(a <= b for a, b in zip(self.i_eps, self.disc))}


def convergence_study(r0: float = 1.0, fractions=(0.2, 0.1, 0.05)) -> tuple[ConvergenceReport, list]:
    profiles = [solve_profile(r0, f * r0) for f in fractions]
    comps = [compare_slices(p) for p in profiles]
    rep = ConvergenceReport(
        r0, tuple(p.epsilon for p in profiles), tuple(c.sup_error for c in comps),
        tuple(p.scaled_height for p in profiles), tuple(el_residual(p) for p in profiles),
        tuple(p.i_eps() for p in profiles), tuple(disc_i_eps(r0, p.epsilon) for p in profiles))
    return rep, list(zip(profiles, comps))


# scaling -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingReport:
    lam: float
    r0: float
    epsilon: float
    max_rel_error: float
    height_rel_error: float
    slices_rel_error: float
    tol: float = 1e-6

    @property
    def verdict(self) -> bool:
        return max(self.max_rel_error, self.height_rel_error, self.slices_rel_error) < self.tol

    def to_dict(self) -> dict:
        return {"check": "scaling_lemma", "lambda": self.lam, "r0": self.r0,
                "epsilon": self.epsilon, "max_rel_error": self.max_rel_error,
                "height_rel_error": self.height_rel_error,
                "slices_rel_error": self.slices_rel_error, "verdict": self.verdict}


def check_scaling_lemma(profile: TranslatorProfile, lam: float, n: int = 2001) -> ScalingReport:
    """Independent solve at ``(lam r0, lam eps)`` against the ``S_lam`` image of ``profile``.

    Heights are compared pointwise over the disc relative to the scaled
    tip height; slices are compared after the parabolic scaling ``eta_lam``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    r0, eps = profile.r0, profile.epsilon
    other = solve_profile(lam * r0, lam * eps)
    r = np.linspace(0.0, r0, n)
    scale = lam * profile.height
    err = np.abs(other.u(lam * r) - lam * profile.u(r)).max() / scale
    herr = abs(other.height - lam * profile.height) / scale
    t, rad = rescaled_slices(profile)
    t_l = lam * lam * t
    inside = (t_l > 0) & (t_l < other.scaled_height)
    rad_l = slice_radius(other, t_l[inside][:: max(1, inside.sum() // 200)])
    rad_ref = lam * rad[inside][:: max(1, inside.sum() // 200)]
    serr = float(np.abs(rad_l - rad_ref).max() / (lam * r0)) if len(rad_l) else 0.0
    return ScalingReport(lam, r0, eps, float(err), float(herr), serr)
