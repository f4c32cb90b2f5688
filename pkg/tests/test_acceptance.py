"""Acceptance criteria 1-11.  Each test prints one ``criterion NN: PASS/FAIL`` line."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pgmt import coarea, monotonicity, track, translator
from pgmt.geometry import box_chain
from pgmt.measure import par_content
from pgmt.suites import filling_lower_bound, ladder_from, scaling_exponent, time_segment

pytestmark = pytest.mark.slow

FINE = ladder_from([3, 9])
THEOREM_LADDER = ladder_from([3, 7])


def test_criterion_01_time_segment_calibration(record_criterion):
    est = par_content(time_segment(), 2, FINE)
    err = abs(est.finest / (math.pi / 4) - 1)
    ok = record_criterion(1, err < 5e-3, f"H2 of [0,1] at delta=2^-9: {est.finest:.6f} "
                                         f"vs pi/4, rel err {err:.2e} (< 5e-3)")
    assert ok


def test_criterion_02_spatial_null(record_criterion):
    est = par_content(box_chain([0, 0, 0], [0, 1, 1]), 3, ladder_from([3, 8]))
    v = np.asarray(est.values)
    ratios = v[1:] / v[:-1]
    proportional = bool(np.all(np.abs(ratios - 0.5) < 0.08))
    ok = record_criterion(2, proportional and est.extrapolated < 1e-2,
                          f"halving ratios {np.round(ratios, 3).tolist()}, "
                          f"extrapolated {est.extrapolated:.2e} (< 1e-2)")
    assert ok


def test_criterion_03_coarea_ratio_constancy(record_criterion, circle_track, calibration_k1):
    sets = coarea.k1_test_sets(circle_track.chain)
    reps = coarea.coarea_matrix(sets)
    ratios = [r.ratio for r in reps]
    spread = coarea.relative_spread(ratios)
    ok = record_criterion(3, len(sets) >= 5 and spread < 0.10,
                          f"{len(sets)} sets x {len(coarea.WEIGHTS)} weights, ratios "
                          f"{min(ratios):.3f}..{max(ratios):.3f}, spread {spread:.2%} (< 10%); "
                          f"calibrated c1 {calibration_k1.c1:.4f}")
    assert ok


def test_criterion_04_area_formula(record_criterion):
    worst, name = 0.0, ""
    for key, F in coarea.MAPS.items():
        if not F.injective:
            continue
        dev = abs(coarea.area_formula_check(F).ratio - 1)
        if dev >= worst:
            worst, name = dev, key
    ok = record_criterion(4, worst <= 0.05,
                          f"{len(coarea.INJECTIVE_MAPS)} injective maps, worst |ratio-1| "
                          f"{worst:.4f} ({name}) (<= 0.05)")
    assert ok


def test_criterion_05_volume_estimate(record_criterion):
    holds, tight_shear = [], None
    for key, F in coarea.MAPS.items():
        rep = coarea.volume_estimate_check(F)
        holds.append(rep.holds)
        if key == "shear":
            tight_shear = rep.tight
    ok = record_criterion(5, all(holds) and bool(tight_shear),
                          f"holds on {sum(holds)}/{len(holds)} maps; shear (m=1) tight: {tight_shear}")
    assert ok


def test_criterion_06_circle_and_ellipse_extinction(record_criterion, histories):
    c = histories["circle"].extinction_time
    e = histories["ellipse"].extinction_time
    ok = record_criterion(6, abs(c - 0.5) <= 0.005 and abs(e - 1.0) <= 0.02,
                          f"circle tau {c:.5f} (0.5 +- 1%), ellipse 2:1 tau {e:.5f} (1.0 +- 2%)")
    assert ok


def test_criterion_07_extinction_squeeze(record_criterion, histories):
    rows, ok = [], len(histories) >= 6
    for label, h in histories.items():
        tau = h.extinction_time
        lo = monotonicity.extinction_lower_bound(filling_lower_bound(h), h.mass0)
        hi = monotonicity.extinction_upper_bound(h.mass0)
        ok &= lo <= tau <= hi
        rows.append(f"{label} {lo:.3f}<={tau:.3f}<={hi:.3f}")
    ok = record_criterion(7, bool(ok), f"{len(histories)} curves: " + "; ".join(rows))
    assert ok


def test_criterion_08_monotonicity(record_criterion, histories):
    worst, ok = 0.0, True
    for h in histories.values():
        tau = h.extinction_time
        times = monotonicity.default_times(h, tau)
        for c in monotonicity.center_grid(h):
            rep = monotonicity.check_monotone(monotonicity.density_series(h, c, tau, times), 1e-3)
            worst = max(worst, rep.max_relative_increase)
            ok &= rep.verdict
    circle = histories["circle"]
    s = monotonicity.density_series(circle, monotonicity.extinction_point(circle),
                                    circle.extinction_time)
    dev = float(np.max(np.abs(s.values / monotonicity.SQRT_2PI_OVER_E - 1)))
    ok = record_criterion(8, bool(ok) and dev <= 1e-3,
                          f"{len(histories)} histories x 9 centers, worst relative increase "
                          f"{worst:.2e} (<= 1e-3); circle density deviation from sqrt(2pi/e) "
                          f"{dev:.2e} (<= 1e-3)")
    assert ok


def test_criterion_09_estimates_and_theorem_B(record_criterion, histories, tracks):
    ok = True
    for label, h in histories.items():
        tau = h.extinction_time
        for B in ((0.0, 0.25 * tau), (0.25 * tau, 0.5 * tau), (0.0, tau)):
            area_chk, mass_chk = track.check_projection_estimates(tracks[label], B)
            ok &= area_chk.verdict and mass_chk.verdict
        rep = track.check_theorem_B(tracks[label])
        ok &= rep.verdict and rep.extra["boundary_is_T0"]
    circle = track.check_theorem_B(tracks["circle"])
    stated = abs(circle.lhs / math.pi - 1) < 0.02 and abs(circle.rhs / (2 * math.pi**1.5) - 1) < 1e-3
    ok = record_criterion(9, bool(ok and stated),
                          f"all {len(histories)} histories pass; circle {circle.lhs:.4f} "
                          f"(pi) <= {circle.rhs:.4f} (2 pi^1.5 = {2 * math.pi**1.5:.4f})")
    assert ok


def test_criterion_10_theorem_C_and_scaling(record_criterion, circle_track, calibration_k1):
    rep = track.check_theorem_C(circle_track, calibration_k1.c1, THEOREM_LADDER)
    literal = calibration_k1.c1 * math.pi**2 / 12
    expos = []
    for lam in (0.5, 2.0):
        lad = THEOREM_LADDER if lam <= 1 else THEOREM_LADDER[:-1]
        expos.append(scaling_exponent(circle_track.chain, 3.0, lam, lad)[0])
    agree = abs(rep.agreement - 1) < 0.10
    scaled = all(abs(e / 3 - 1) < 0.03 for e in expos)
    ok = record_criterion(10, agree and scaled,
                          f"mu {rep.mu:.4f} vs route c1(pi/4)int L dt = c1 pi^2/6 = {rep.route_D:.4f} "
                          f"(ratio {rep.agreement:.4f}, within 10%); literal c1 pi^2/12 = "
                          f"{literal:.4f} gives ratio {rep.mu / literal:.3f} (informational); "
                          f"exponents {expos[0]:.4f}, {expos[1]:.4f} vs 3 (within 3%)")
    assert ok


def test_criterion_11_translator(record_criterion):
    rep, _ = translator.convergence_study(1.0, (0.2, 0.1, 0.05))
    residual = max(rep.residuals)
    grim = max(translator.grim_reaper_residual(e) for e in (0.2, 0.1, 0.05))
    profile = translator.solve_profile(1.0, 0.1)
    scal = [translator.check_scaling_lemma(profile, lam) for lam in (0.5, 2.0)]
    scal_err = max(max(s.max_rel_error, s.height_rel_error, s.slices_rel_error) for s in scal)
    ok = record_criterion(11, residual < 1e-6 and grim < 1e-8 and rep.monotone and scal_err < 1e-6,
                          f"EL residual {residual:.1e} (< 1e-6); grim reaper {grim:.1e} (< 1e-8); "
                          f"slice sup errors {', '.join(f'{e:.3f}' for e in rep.sup_errors)} "
                          f"non-increasing; scaling lemma {scal_err:.1e} (< 1e-6)")
    assert ok
