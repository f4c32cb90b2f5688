from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgmt.geometry import (PolyhedralChain, ScalingMap, SpaceTimePoint, apply_scaling, box_chain,
                           chain_boundary, chain_mass, chains_equal, cylindrical, euclidean,
                           par_dist, par_dist_array, parabolic, push_scaling, reduce_chain)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_par_dist_examples():
    assert par_dist(SpaceTimePoint(0, (0,)), SpaceTimePoint(1, (0,))) == 1.0
    assert par_dist(SpaceTimePoint(0, (0, 0)), SpaceTimePoint(0.25, (0.3, 0))) == pytest.approx(0.5)
    p, q = SpaceTimePoint(1, (0.0, 1.0)), SpaceTimePoint(1, (3.0, -3.0))
    assert par_dist(p, q) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        par_dist(SpaceTimePoint(0, (0,)), SpaceTimePoint(0, (0, 0)))


def test_space_time_point_rejects_non_finite():
    with pytest.raises(ValueError):
        SpaceTimePoint(float("nan"), (0,))


def test_triangle_inequality_random_triples():
    rng = np.random.default_rng(3)
    a, b, c = (rng.normal(size=(20000, 3)) for _ in range(3))
    lhs = par_dist_array(a, c)
    assert np.all(lhs <= par_dist_array(a, b) + par_dist_array(b, c) + 1e-12)


@given(st.lists(coord, min_size=3, max_size=3), st.lists(coord, min_size=3, max_size=3),
       st.floats(0.01, 100))
def test_parabolic_scaling_of_distance(p, q, lam):
    P, Q = SpaceTimePoint.from_array(p), SpaceTimePoint.from_array(q)
    eta = parabolic(lam)
    scaled = par_dist(apply_scaling(eta, P), apply_scaling(eta, Q))
    assert scaled == pytest.approx(lam * par_dist(P, Q), rel=1e-12, abs=1e-12)


def test_apply_scaling_examples():
    assert apply_scaling(parabolic(2), SpaceTimePoint(1, (1, 0))).as_array().tolist() == [4, 2, 0]
    assert apply_scaling(cylindrical(0.1), SpaceTimePoint(10, (0.3,))).as_array() == pytest.approx([1, 0.3])
    p = SpaceTimePoint(0.7, (1.5, -2.0))
    assert apply_scaling(parabolic(1), p) == p
    assert apply_scaling(euclidean(3), p).as_array() == pytest.approx([2.1, 4.5, -6.0])
    with pytest.raises(ValueError):
        ScalingMap("parabolic", 0.0)
    with pytest.raises(ValueError):
        ScalingMap("affine", 1.0)


def test_chain_mass_examples():
    seg = PolyhedralChain(1, [[0.0], [1.0]], [[0, 1]], [1], [1])
    assert chain_mass(seg) == 1.0
    tri = PolyhedralChain(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [1], [1])
    assert chain_mass(tri) == pytest.approx(0.5)
    tri2 = PolyhedralChain(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [2], [1])
    assert chain_mass(tri2) == pytest.approx(1.0)


def test_invalid_chains_rejected():
    with pytest.raises(ValueError):
        PolyhedralChain(1, [[0.0], [0.0]], [[0, 1]], [1], [1])      # degenerate
    with pytest.raises(ValueError):
        PolyhedralChain(1, [[0.0], [1.0]], [[0, 1]], [0], [1])      # zero multiplicity
    with pytest.raises(ValueError):
        PolyhedralChain(1, [[0.0], [1.0]], [[0, 2]], [1], [1])      # index out of range
    with pytest.raises(ValueError):
        PolyhedralChain(2, [[0.0], [1.0], [2.0]], [[0, 1, 2]], [1], [1])  # dim > ambient


def test_boundary_of_triangle_and_polygon():
    tri = PolyhedralChain(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [1], [1])
    b = chain_boundary(tri)
    assert len(b) == 3
    assert chain_mass(b) == pytest.approx(2 + math.sqrt(2))
    assert chain_boundary(b).is_empty()
    th = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    circle = PolyhedralChain.polygon(np.column_stack([np.cos(th), np.sin(th)]))
    assert chain_boundary(circle).is_empty()
    open_curve = PolyhedralChain.polygon(np.column_stack([np.cos(th), np.sin(th)]), closed=False)
    assert len(chain_boundary(open_curve)) == 2


@st.composite
def random_chains(draw):
    dim = draw(st.integers(1, 3))
    ambient = draw(st.integers(dim, 3))
    S = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    coords = rng.normal(size=(S, dim + 1, ambient))
    mult = rng.integers(1, 4, size=S)
    sign = rng.choice([-1, 1], size=S)
    return PolyhedralChain.from_coords(coords, mult, sign, drop_degenerate=True)


@settings(max_examples=60, deadline=None)
@given(random_chains())
def test_boundary_squared_is_empty(c):
    if c.is_empty() or c.dim < 2:
        return
    assert chain_boundary(chain_boundary(c)).is_empty()


@settings(max_examples=60, deadline=None)
@given(random_chains(), st.floats(0.1, 10))
def test_mass_scales_with_euclidean_dilation(c, lam):
    scaled = push_scaling(euclidean(lam), c)
    assert chain_mass(scaled) == pytest.approx(lam**c.dim * chain_mass(c), rel=1e-9)


def test_box_boundary_cancels_interior_faces():
    box = box_chain([0, 0, 0], [1, 2, 3])
    assert chain_mass(box) == pytest.approx(6.0)
    b = reduce_chain(chain_boundary(box))
    assert chain_mass(b) == pytest.approx(2 * (2 + 3 + 6))
    assert chain_boundary(b).is_empty()


def test_json_round_trip(tmp_path):
    c = box_chain([0, 0, 0], [1, 1, 0.5])
    d = c.to_dict()
    assert set(d) == {"dim", "ambient", "time_flag", "vertices", "simplices"}
    assert set(d["simplices"][0]) == {"verts", "mult", "sign"}
    back = PolyhedralChain.from_json(c.to_json())
    assert chains_equal(back, c)
    path = tmp_path / "c.json"
    c.save(path)
    assert chains_equal(PolyhedralChain.load(path), c)


def test_push_scaling_requires_time_for_parabolic():
    c = PolyhedralChain.polygon(np.eye(3)[:, :2])
    with pytest.raises(ValueError):
        push_scaling(parabolic(2), c)
