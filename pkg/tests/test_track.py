from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from pgmt import flow, track
from pgmt.geometry import chain_boundary, chains_equal, reduce_chain
from pgmt.measure import slice_at_time


def _two_snapshot_history(dt=0.3):
    X = flow.circle(1.0, N=64)
    return flow.FlowHistory(np.array([0.0, dt]), (X, X.copy()), dt, flow.signed_area(X))


def test_cylinder_from_identical_snapshots():
    h = _two_snapshot_history(0.3)
    tr = track.build_track(h, cap=False)
    assert tr.mass() == pytest.approx(flow.curve_length(h.points[0]) * 0.3)
    proj = track.project_spatial(tr)
    assert proj.mass == pytest.approx(0.0, abs=1e-12)


def test_single_snapshot_gives_empty_track():
    X = flow.circle(1.0, N=32)
    h = flow.FlowHistory(np.array([0.0]), (X,), 0.0, flow.signed_area(X))
    assert track.build_track(h).chain.is_empty()


def test_broken_correspondence_rejected():
    X = flow.circle(1.0, N=32)
    h = flow.FlowHistory(np.array([0.0, 0.1]), (X, flow.circle(0.9, N=40)), 0.2, 1.0)
    with pytest.raises(ValueError):
        track.build_track(h)


def test_boundary_is_initial_curve(circle_history, circle_track):
    T0 = circle_history.chain(0)
    T0 = T0.with_vertices(np.column_stack([np.zeros(len(T0.vertices)), T0.vertices]), time_flag=True)
    assert chains_equal(reduce_chain(chain_boundary(circle_track.chain)), reduce_chain(T0))
    uncapped = track.build_track(circle_history, cap=False)
    assert len(reduce_chain(chain_boundary(uncapped.chain))) == 2 * len(T0)


def test_slices_reproduce_snapshots(circle_history, circle_track):
    for i in (0, 10, 100):
        s = slice_at_time(circle_track.chain, circle_history.times[i])
        assert chains_equal(reduce_chain(s), reduce_chain(circle_history.chain(i)))


def test_track_mass_matches_closed_form(circle_track, circle_history):
    # cone-like track r(t) = sqrt(1 - 2t): area element 2 pi r sqrt(1 + r'^2) dt
    top = circle_history.times[-1]
    exact, _ = quad(lambda t: 2 * math.pi * math.sqrt(1 - 2 * t) *
                    math.sqrt(1 + 1 / (1 - 2 * t)), 0, top, limit=200)
    uncapped = track.build_track(circle_history, cap=False)
    assert uncapped.mass() == pytest.approx(exact, rel=5e-3)


def test_projection_is_disc(circle_track):
    proj = track.project_spatial(circle_track)
    assert proj.mass == pytest.approx(math.pi, rel=0.02)
    assert proj.swept == pytest.approx(proj.mass, rel=1e-9)
    empty = track.project_spatial(circle_track, (0.0, 0.0))
    assert empty.chain.is_empty() and empty.mass == 0.0
    with pytest.raises(ValueError):
        track.project_spatial(circle_track, (0.0, 5.0))


def test_projection_estimate_examples(circle_track):
    area_chk, mass_chk = track.check_projection_estimates(circle_track, (0.0, 0.5))
    assert area_chk.lhs == pytest.approx(math.pi, rel=0.02) and area_chk.rhs == pytest.approx(4.4429, rel=1e-4)
    assert area_chk.verdict and mass_chk.verdict
    area_chk, _ = track.check_projection_estimates(circle_track, (0.0, 0.01))
    assert area_chk.lhs == pytest.approx(math.pi * 0.02, rel=0.02)
    assert area_chk.rhs == pytest.approx(0.6283, rel=1e-3)
    area_chk, mass_chk = track.check_projection_estimates(circle_track, (0.1, 0.1))
    assert area_chk.lhs == 0.0 and area_chk.rhs == 0.0 and area_chk.verdict and mass_chk.verdict


def test_theorem_B_examples(tracks):
    circle = track.check_theorem_B(tracks["circle"])
    assert circle.rhs == pytest.approx(2 * math.pi**1.5, rel=1e-3)
    assert circle.verdict and circle.extra["boundary_is_T0"]
    ell = track.check_theorem_B(tracks["ellipse"])
    assert ell.lhs == pytest.approx(2 * math.pi, rel=0.01)
    assert ell.rhs == pytest.approx(26.48, rel=2e-3)
    assert ell.verdict


def test_theorem_B_homogeneous_under_dilation(histories, tracks):
    h = histories["rounded_square"]
    base = track.check_theorem_B(tracks["rounded_square"])
    X2 = flow.scale_curve(h.points[0], 2.0)
    h2 = flow.run_to_extinction(X2)
    big = track.check_theorem_B(track.build_track(h2))
    assert big.lhs / base.lhs == pytest.approx(4.0, rel=0.01)
    assert big.rhs / base.rhs == pytest.approx(4.0, rel=1e-6)


def test_estimates_on_all_histories(histories, tracks):
    for label, h in histories.items():
        tr = tracks[label]
        tau = h.extinction_time
        for B in ((0.0, 0.25 * tau), (0.25 * tau, 0.5 * tau)):
            area_chk, mass_chk = track.check_projection_estimates(tr, B)
            assert area_chk.verdict and mass_chk.verdict, (h.label, B)


def test_slice_mass_integral(circle_history):
    assert track.slice_mass_integral(circle_history) == pytest.approx(2 * math.pi / 3, rel=2e-3)


def test_theorem_C_empty_track():
    X = flow.circle(1.0, N=32)
    h = flow.FlowHistory(np.array([0.0]), (X,), 0.0, flow.signed_area(X))
    rep = track.check_theorem_C(track.build_track(h), c1=2.4, ladder=[0.25, 0.125])
    assert rep.mu == 0.0
