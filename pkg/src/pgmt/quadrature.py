"""Gauss rules on simplices and integration of functions over chains."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .geometry import PolyhedralChain


@lru_cache(maxsize=None)
def simplex_rule(k: int, degree: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Conical-product Gauss rule on the k-simplex.

    Returns barycentric coordinates ``(Q, k+1)`` and weights summing to one,
    exact for polynomials of total degree ``<= degree``.
    """
    if k == 0:
        return np.ones((1, 1)), np.ones(1)
    q = max(1, (degree + 2) // 2)
    # collapsed coordinates u_i in [0,1] with Jacobian weight (1-u_i)^(k-i)
    nodes, weights = [], []
    for i in range(1, k + 1):
        x, w = roots_jacobi(q, k - i, 0)
        nodes.append((x + 1.0) / 2.0)
        weights.append(w / w.sum())
    grids = np.meshgrid(*nodes, indexing="ij")
    wgrid = np.prod(np.meshgrid(*weights, indexing="ij"), axis=0).ravel()
    U = np.column_stack([g.ravel() for g in grids])
    Q = len(U)
    bary = np.zeros((Q, k + 1))
    rest = np.ones(Q)
    for i in range(k):
        bary[:, i + 1] = rest * U[:, i]
        rest = rest * (1.0 - U[:, i])
    bary[:, 0] = rest
    return bary, wgrid


def quad_points(chain: PolyhedralChain, degree: int = 5):
    """Quadrature nodes ``(S, Q, d)`` and volume weights ``(S, Q)`` per simplex."""
    bary, w = simplex_rule(chain.dim, degree)
    X = chain.simplex_coords()
    pts = np.einsum("qj,sjd->sqd", bary, X)
    vols = chain.volumes()
    return pts, vols[:, None] * w[None, :]


def integrate(chain: PolyhedralChain, f, degree: int = 5, weighted: bool = True) -> float:
    """``sum_s |mult_s| * int_s f dH^k`` for a vectorised ``f(points) -> values``."""
    if chain.is_empty():
        return 0.0
    pts, W = quad_points(chain, degree)
    S, Q, d = pts.shape
    vals = np.asarray(f(pts.reshape(S * Q, d)), dtype=float).reshape(S, Q)
    per = (vals * W).sum(axis=1)
    if weighted:
        per = per * np.abs(chain.mult)
    return float(per.sum())


def integrate_exp_affine_segments(a: np.ndarray, b: np.ndarray, length: np.ndarray) -> np.ndarray:
    """Exact ``int_segment exp(s)`` for an exponent varying linearly from ``a`` to ``b``."""
    d = b - a
    small = np.abs(d) < 1e-300
    ratio = np.where(small, 1.0, np.expm1(np.where(small, 1.0, d)) / np.where(small, 1.0, d))
    return length * np.exp(a) * ratio
