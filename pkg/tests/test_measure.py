from __future__ import annotations

import math

import numpy as np
import pytest

from pgmt.geometry import PolyhedralChain, box_chain, grid_box_chain, parabolic, push_scaling
from pgmt.measure import (MeasureEstimate, ParabolicBox, alpha, drop_time, par_content,
                          par_content_weights, par_grid_cover, restrict_time, richardson,
                          slice_at_time)
from pgmt.coarea import static_cylinder

TIME_SEGMENT = PolyhedralChain(1, [[0.0], [1.0]], [[0, 1]], [1], [1], True)


def test_alpha_normalisation():
    assert alpha(1) == pytest.approx(2.0)
    assert alpha(2) == pytest.approx(math.pi)
    assert alpha(3) == pytest.approx(4 * math.pi / 3)


def test_parabolic_box_shape():
    b = ParabolicBox(0.0, (0.0, 0.0), 0.5)
    assert b.h == pytest.approx(0.25)
    assert b.diameter == pytest.approx(max(0.5, 0.5 * math.sqrt(2)))


@pytest.mark.parametrize("m", [4, 8, 16])
def test_cover_counts(m):
    n_time = len(par_grid_cover(TIME_SEGMENT, 1.0 / m))
    assert m * m <= n_time <= m * m + 1
    seg = PolyhedralChain(1, [[0.0, 0.0], [0.0, 1.0]], [[0, 1]], [1], [1], True)
    assert m <= len(par_grid_cover(seg, 1.0 / m)) <= m + 2
    pt = PolyhedralChain(0, [[0.1, 0.2]], [[0]], [1], [1], True)
    assert 1 <= len(par_grid_cover(pt, 1.0 / m)) <= 4


def test_cover_rejects_bad_delta():
    with pytest.raises(ValueError):
        par_grid_cover(TIME_SEGMENT, 0.0)
    with pytest.raises(ValueError):
        par_content(TIME_SEGMENT, 2, [0.1, -0.1])


def test_time_segment_content_and_weights():
    ladder = [2.0**-j for j in range(3, 8)]
    one, t_w, zero = par_content_weights(TIME_SEGMENT, 2, [None, lambda P: P[:, 0],
                                                            lambda P: 0 * P[:, 0]], ladder)
    assert one.finest == pytest.approx(math.pi / 4, rel=1e-3)
    assert t_w.extrapolated == pytest.approx(math.pi / 8, rel=1e-3)
    assert zero.extrapolated == 0.0
    assert abs(one.values[-1] / one.values[-2] - 1) < 0.01


def test_measure_estimate_invariants_and_export(tmp_path):
    with pytest.raises(ValueError):
        MeasureEstimate(2.0, (0.1, 0.2), (1.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        MeasureEstimate(2.0, (0.2, 0.1), (1.0, -1.0), 1.0)
    est = par_content(TIME_SEGMENT, 2, [0.25, 0.125])
    d = est.to_dict()
    assert {"s", "convention", "ladder", "extrapolated"} <= set(d)
    assert [e["delta"] for e in d["ladder"]] == [0.25, 0.125]
    est.write_csv(tmp_path / "ladder.csv")
    assert (tmp_path / "ladder.csv").read_text().splitlines()[0] == "delta,value"


def test_richardson_first_order():
    deltas = [0.1, 0.05]
    assert richardson(deltas, [2.0 + 0.1, 2.0 + 0.05]) == pytest.approx(2.0)


def test_spatial_square_is_null():
    est = par_content(box_chain([0, 0, 0], [0, 1, 1]), 3, [2.0**-j for j in range(3, 8)])
    ratios = np.array(est.values[1:]) / np.array(est.values[:-1])
    assert np.all(np.abs(ratios - 0.5) < 0.08)
    assert est.extrapolated < 1e-2


def test_top_dimensional_boxes_proportional():
    ladder = [2.0**-j for j in range(3, 9)]
    shapes = [(1, 1), (0.5, 2), (2, 0.5), (0.25, 1.5), (1.5, 0.75), (3, 0.3)]
    c = [par_content(box_chain([0, 0], [T, L]), 3, ladder).extrapolated / (T * L) for T, L in shapes]
    assert (max(c) - min(c)) / np.mean(c) < 0.02


def test_parabolic_scaling_of_content():
    box = box_chain([0, 0], [1, 1])
    ladder = [2.0**-j for j in range(3, 8)]
    base = par_content(box, 3, ladder).extrapolated
    for lam in (0.5, 2.0, 3.0):
        scaled = par_content(push_scaling(parabolic(lam), box), 3, ladder).extrapolated
        assert scaled / base == pytest.approx(lam**3, rel=0.02)


def test_absolute_continuity_on_random_lofted_sets():
    rng = np.random.default_rng(7)
    ratios = []
    for _ in range(10):
        N = 12
        th = np.sort(rng.uniform(0, 2 * np.pi, N))
        r0 = rng.uniform(0.5, 1.0, N)
        r1 = r0 * rng.uniform(0.3, 0.9)
        T = rng.uniform(0.2, 0.6)
        P = np.column_stack([r0 * np.cos(th), r0 * np.sin(th)])
        Q = np.column_stack([r1 * np.cos(th), r1 * np.sin(th)])
        a = np.column_stack([np.zeros(N), P])
        b = np.column_stack([np.zeros(N), np.roll(P, -1, 0)])
        c = np.column_stack([np.full(N, T), Q])
        d = np.column_stack([np.full(N, T), np.roll(Q, -1, 0)])
        chain = PolyhedralChain.from_coords(np.concatenate([np.stack([a, b, c], 1),
                                                            np.stack([b, d, c], 1)]), time_flag=True)
        est = par_content(chain, 3, [0.125, 0.0625])
        ratios.append(est.finest / chain.mass())
    assert max(ratios) < 10.0 and min(ratios) > 0


def test_slices():
    cyl = static_cylinder(1.0, 1.0, N=256)
    s = slice_at_time(cyl, 0.5)
    assert s.dim == 1 and s.ambient == 2
    assert s.mass() == pytest.approx(2 * 256 * math.sin(math.pi / 256))
    assert slice_at_time(cyl, 1.5).is_empty()
    assert slice_at_time(cyl, -0.1).is_empty()


def test_slice_of_shrinking_circle_track(circle_track, circle_history):
    for i in (0, 40, 120, len(circle_history) - 2):
        t = circle_history.times[i]
        s = slice_at_time(circle_track.chain, t)
        assert s.mass() == pytest.approx(circle_history.lengths[i], rel=1e-9)
        if t < 0.4:
            assert s.mass() == pytest.approx(2 * math.pi * math.sqrt(1 - 2 * t), rel=2e-3)
    assert slice_at_time(circle_track.chain, circle_history.extinction_time + 0.1).is_empty()


def test_restrict_and_drop_time():
    box = grid_box_chain([0, 0, 0], [1, 1, 0], 2)
    part = restrict_time(box, 0.25, 0.5)
    assert part.mass() == pytest.approx(0.25)
    flat = drop_time(box_chain([0, 0, 0], [1, 1, 1]))
    assert flat.time_flag is False and flat.ambient == 2
