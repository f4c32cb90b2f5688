from __future__ import annotations

import math

import numpy as np
import pytest

from pgmt.monotonicity import (SQRT_2PI_OVER_E, GaussianDensitySeries, center_grid, check_monotone,
                               density_series, extinction_lower_bound, extinction_point,
                               extinction_squeeze, extinction_upper_bound, gaussian_density)


def test_self_shrinker_density_is_constant(circle_history):
    h = circle_history
    s = density_series(h, np.zeros(2), h.extinction_time)
    assert len(s.times) >= 20
    assert np.max(np.abs(s.values / SQRT_2PI_OVER_E - 1)) < 1e-4
    assert check_monotone(s).verdict


def test_density_near_smooth_point_tends_to_one(histories):
    h = histories["ellipse"]
    t = 0.3
    X = h.curve_at(t)
    p = X[17]
    # kernel width must exceed the edge length (about 0.03) yet stay below the curvature scale
    for lag in (3e-4, 1e-3):
        assert gaussian_density(h, p, t + lag, t) == pytest.approx(1.0, abs=2e-3)


def test_density_far_away_vanishes(circle_history):
    assert gaussian_density(circle_history, [5.0, 0.0], 0.11, 0.1) < 1e-100


def test_density_requires_t_before_tau0(circle_history):
    with pytest.raises(ValueError):
        gaussian_density(circle_history, [0, 0], 0.1, 0.1)


def test_ellipse_density_nonincreasing_on_center_grid(histories):
    h = histories["ellipse"]
    for c in center_grid(h):
        assert check_monotone(density_series(h, c, h.extinction_time)).verdict


def test_negative_control_fails():
    s = GaussianDensitySeries((0.0, 0.0), 1.0, np.linspace(0, 0.5, 21), np.linspace(1.0, 1.2, 21))
    rep = check_monotone(s)
    assert not rep.verdict and rep.max_relative_increase > 1e-3


def test_series_validation():
    with pytest.raises(ValueError):
        GaussianDensitySeries((0.0,), 0.5, np.array([0.1, 0.6]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        GaussianDensitySeries((0.0,), 0.5, np.array([0.1, 0.2]), np.array([1.0, -1.0]))


def test_upper_bound_examples():
    assert extinction_upper_bound(2 * math.pi) == pytest.approx(math.pi)
    assert extinction_upper_bound(4 * math.pi) == pytest.approx(4 * math.pi)
    assert extinction_upper_bound(4 * math.pi, k=2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        extinction_upper_bound(0.0)


def test_lower_bound_examples():
    assert extinction_lower_bound(math.pi, 2 * math.pi) == pytest.approx(0.25)
    for r0 in (0.5, 1.0, 3.0):
        assert extinction_lower_bound(math.pi * r0**2, 2 * math.pi * r0) == pytest.approx(r0**2 / 4)
    assert extinction_lower_bound(2 * math.pi, 9.6884) == pytest.approx(0.4206, abs=1e-3)
    with pytest.raises(ValueError):
        extinction_lower_bound(0.0, 1.0)


def test_squeeze_on_planar_histories(histories):
    for h in histories.values():
        if h.planar:
            rep = extinction_squeeze(h)
            assert rep.verdict and not rep.one_sided, h.label


def test_squeeze_non_planar_needs_filling(histories):
    h = histories["saddle"]
    with pytest.raises(ValueError):
        extinction_squeeze(h)
    rep = extinction_squeeze(h, filling_mass=1.0)
    assert rep.one_sided


def test_extinction_point_of_circle(circle_history):
    assert np.linalg.norm(extinction_point(circle_history)) < 1e-6
    assert len(center_grid(circle_history)) == 9
