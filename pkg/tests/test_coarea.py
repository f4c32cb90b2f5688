from __future__ import annotations

import math

import numpy as np
import pytest

from pgmt.coarea import (MAPS, WEIGHTS, VerticalMap, area_formula_check, calibration_box,
                         check_injective, coarea_lhs, coarea_ratio, coarea_rhs, horizontal_jacobian,
                         horizontal_jacobians, relative_spread, static_cylinder,
                         volume_estimate_check)
from pgmt.geometry import PolyhedralChain, box_chain, grid_box_chain
from pgmt.measure import par_content

COARSE = tuple(2.0**-j for j in range(3, 7))


def test_registry_maps_validate():
    for name, F in MAPS.items():
        v = F.validate(seed=1)
        assert v["time_preserved"], name
        assert v["full_ok"] and v["horizontal_ok"], (name, v)


@pytest.mark.parametrize("name,expected", [("identity", 1.0), ("dilation", 2.0), ("shear", 1.0),
                                           ("isometry", 1.0), ("diag22", 4.0), ("diag23", 6.0)])
def test_horizontal_jacobian_linear(name, expected):
    F = MAPS[name]
    p = 0.5 * (np.asarray(F.lower) + np.asarray(F.upper))
    assert horizontal_jacobian(F, p) == pytest.approx(expected, rel=1e-8)


def test_horizontal_jacobian_matches_analytic():
    rng = np.random.default_rng(0)
    for name in ("rotating", "graph", "diag23"):
        F = MAPS[name]
        lo, hi = np.asarray(F.lower) + 0.01, np.asarray(F.upper) - 0.01
        P = lo + (hi - lo) * rng.random((200, len(lo)))
        err = np.abs(horizontal_jacobians(F, P) - F.analytic_jacobian(P)).max()
        assert err < 1e-7, name


def test_horizontal_jacobian_needs_interior_point():
    F = MAPS["identity"]
    with pytest.raises(ValueError):
        horizontal_jacobian(F, [0.5, 0.0])


def test_injectivity_detection():
    assert all(check_injective(F) for F in MAPS.values() if F.injective)
    assert not check_injective(MAPS["fold"])
    with pytest.raises(ValueError):
        area_formula_check(MAPS["fold"])


def test_rhs_examples():
    cyl = static_cylinder(0.5, 1.0, N=128)
    slice_len = 128 * 2 * 0.5 * math.sin(math.pi / 128)
    assert coarea_rhs(cyl) == pytest.approx(math.pi / 4 * slice_len, rel=1e-12)
    assert coarea_rhs(cyl, lambda P: 0 * P[:, 0]) == 0.0
    flat = box_chain([0.3, 0, 0], [0.3, 1, 1])
    assert coarea_rhs(flat) == 0.0


def test_lhs_examples():
    seg = PolyhedralChain(1, [[0.0], [1.0]], [[0, 1]], [1], [1], True)
    ladder = tuple(2.0**-j for j in range(3, 9))
    assert coarea_lhs(seg, WEIGHTS["t"], ladder).extrapolated == pytest.approx(math.pi / 8, rel=2e-3)
    assert coarea_lhs(seg, lambda P: 0 * P[:, 0], ladder).extrapolated == 0.0
    box = calibration_box(1, 1.0, 1.0, 0.0)
    assert coarea_lhs(box, None, COARSE).extrapolated == pytest.approx(
        par_content(box, 3, COARSE).extrapolated)


def test_fixed_time_set_is_degenerate_and_null():
    flat = box_chain([0.3, 0, 0], [0.3, 1, 1])
    rep = coarea_ratio(flat, None, COARSE)
    assert rep.degenerate and math.isnan(rep.ratio)
    vals = rep.estimate.values
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert rep.to_dict()["ratio"] is None


def test_calibration_box_geometry():
    b = calibration_box(1, 0.5, 2.0, 0.3)
    assert b.mass() == pytest.approx(1.0)
    assert b.time_extent() == (0.0, 0.5)
    b2 = calibration_box(2, 0.5, 2.0, 0.3)
    assert b2.dim == 3 and b2.mass() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        calibration_box(3, 1, 1, 0)


def test_calibration_constant(calibration_k1):
    assert calibration_k1.spread < 0.02
    assert 2.2 < calibration_k1.c1 < 2.6
    assert len(calibration_k1.boxes) >= 5


def test_ratio_constant_on_cylinder_and_tilted_box(calibration_k1):
    cyl = coarea_ratio(static_cylinder(), None)
    tilted = coarea_ratio(MAPS["graph"].image(), WEIGHTS["abs_x"])
    assert relative_spread([cyl.ratio, tilted.ratio, calibration_k1.c1]) < 0.05


def test_volume_estimate_examples():
    dil = volume_estimate_check(MAPS["dilation"], COARSE)
    assert dil.image_content / dil.domain_content == pytest.approx(2.0, rel=0.01)
    assert dil.factor == 8.0 and dil.holds and not dil.tight
    shear = volume_estimate_check(MAPS["shear"], COARSE)
    assert shear.holds and shear.tight


def test_area_formula_linear_k1():
    rep = area_formula_check(MAPS["dilation"], ladder=COARSE)
    assert rep.ratio == pytest.approx(1.0, abs=0.02)
    assert rep.to_dict()["verdict"]


def test_vertical_map_image_tessellation():
    F = MAPS["graph"]
    img = F.image()
    assert img.n_space == 2 and len(img) == len(F.domain())
    # graph of (t, x) -> t x over the unit square has area int sqrt(1 + t^2 + x^2)
    assert img.mass() == pytest.approx(1.28079, rel=2e-3)


def test_custom_map_construction():
    F = VerticalMap("stretch", 1, 1, lambda P: np.column_stack([P[:, 0], 3 * P[:, 1]]),
                    (0.0, 0.0), (1.0, 1.0), 3.0, 3.0)
    assert isinstance(F.domain(), PolyhedralChain)
    assert horizontal_jacobian(F, [0.5, 0.5]) == pytest.approx(3.0)
    assert grid_box_chain([0, 0], [1, 1], 2).mass() == pytest.approx(1.0)
