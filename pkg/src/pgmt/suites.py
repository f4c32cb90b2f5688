"""Experiment suites composed from the library modules.

Each suite takes a resolved configuration and a shared :class:`Context`
(which caches flow histories and the ``c1`` calibration) and returns a
:class:`~pgmt.report.SuiteResult`.
"""

from __future__ import annotations

import copy
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coarea, flow, measure, monotonicity, track, translator
from .geometry import PolyhedralChain, box_chain, parabolic, push_scaling
from .report import SuiteResult

log = logging.getLogger(__name__)

SUITES = ("flow", "measure", "coarea", "area-formula", "monotonicity", "theorems",
          "translator", "calibrate")

DEFAULTS: dict = {
    "seed": 0,
    "workers": 1,
    "flow": {
        "curve": None,          # a single registry name; None runs the default registry
        "r0": 1.0,
        "n_vertices": 256,
        "dt_factor": 0.25,
        "snapshot_every": 200,
        "extinction_factor": 1e-3,
        "grim_reaper": {"margin": 0.3, "n_vertices": 401, "t_end": 0.05, "dt": 1e-5},
        "tolerances": {"circle_tau": 0.01, "ellipse_tau": 0.02, "grim_speed": 0.01},
    },
    "measure": {
        "ladder": [3, 9],
        "tolerances": {"time_segment": 0.005, "spatial_null": 0.01},
    },
    "calibrate": {"k1_ladder": [3, 7], "k2_ladder": [3, 5], "spread_tol": 0.05},
    "coarea": {"ladder": [3, 7], "n_t": 257, "spread_tol": 0.10},
    "area_formula": {"tol": 0.05, "volume_tol": 0.02},
    "monotonicity": {"rel_tol": 1e-3, "constancy_tol": 1e-3, "times": 40},
    "theorems": {"theorem_C": True, "ladder": [3, 7], "lambdas": [0.5, 2.0],
                 "agreement_tol": 0.10, "exponent_tol": 0.03},
    "translator": {"r0": 1.0, "eps_fractions": [0.2, 0.1, 0.05], "lambdas": [0.5, 2.0],
                   "scaling_eps": 0.1, "residual_tol": 1e-6, "grim_tol": 1e-8,
                   "scaling_tol": 1e-6},
}


def ladder_from(spec) -> tuple[float, ...]:
    """``[a, b]`` exponent range to the ladder ``2^-a, ..., 2^-b``; explicit lists pass through."""
    if len(spec) == 2 and all(float(x).is_integer() and x >= 0 for x in spec) and spec[1] > spec[0]:
        return tuple(2.0 ** -int(j) for j in range(int(spec[0]), int(spec[1]) + 1))
    return tuple(float(x) for x in spec)


def merge(base: dict, override: dict) -> dict:
    """Deep merge; keys absent from ``base`` are rejected to catch typos."""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in out:
            raise KeyError(f"unknown configuration key {k!r}")
        if isinstance(out[k], dict) and out[k] and isinstance(v, dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_curves(seed: int = 0) -> list[tuple[str, dict]]:
    """Default curve registry: round, elongated, cornered, random and non-planar."""
    return [
        ("circle", {"name": "circle"}),
        ("ellipse", {"name": "ellipse", "a": 2.0, "b": 1.0}),
        ("rounded_square", {"name": "rounded_polygon", "sides": 4}),
        ("rounded_triangle", {"name": "rounded_polygon", "sides": 3}),
        ("fourier_a", {"name": "fourier", "seed": seed}),
        ("fourier_b", {"name": "fourier", "seed": seed + 1, "amplitude": 0.25}),
        ("saddle", {"name": "saddle"}),
    ]


def _flow_options(cfg: dict) -> flow.FlowOptions:
    f = cfg["flow"]
    return flow.FlowOptions(n_vertices=f["n_vertices"], dt_factor=f["dt_factor"],
                            snapshot_every=f["snapshot_every"],
                            extinction_factor=f["extinction_factor"])


def _run_one(args) -> flow.FlowHistory:
    label, spec, opts = args
    return flow.run_to_extinction(flow.make_curve(spec, opts.n_vertices), opts, label)


@dataclass
class Context:
    cfg: dict
    _histories: dict | None = None
    _calibrations: dict = field(default_factory=dict)
    _tracks: dict = field(default_factory=dict)

    def curve_specs(self) -> list[tuple[str, dict]]:
        f = self.cfg["flow"]
        if f["curve"]:
            spec = {"name": f["curve"]}
            if f["curve"] in ("circle", "fourier", "saddle"):
                spec["r0"] = f["r0"]
            return [(f["curve"], spec)]
        return default_curves(self.cfg["seed"])

    def histories(self) -> dict[str, flow.FlowHistory]:
        if self._histories is None:
            opts = _flow_options(self.cfg)
            jobs = [(label, spec, opts) for label, spec in self.curve_specs()]
            if self.cfg["workers"] > 1 and len(jobs) > 1:
                with ProcessPoolExecutor(self.cfg["workers"]) as pool:
                    hs = list(pool.map(_run_one, jobs))
            else:
                hs = [_run_one(j) for j in jobs]
            self._histories = {h.label: h for h in hs}
        return self._histories

    def circle(self) -> flow.FlowHistory:
        hs = self.histories()
        if "circle" in hs:
            return hs["circle"]
        if "circle_history" not in self._tracks:
            self._tracks["circle_history"] = _run_one(("circle", {"name": "circle"},
                                                        _flow_options(self.cfg)))
        return self._tracks["circle_history"]

    def track(self, label: str) -> track.SpaceTimeTrack:
        if label not in self._tracks:
            h = self.circle() if label == "circle" else self.histories()[label]
            self._tracks[label] = track.build_track(h)
        return self._tracks[label]

    def calibration(self, k: int) -> coarea.Calibration:
        if k not in self._calibrations:
            key = "k1_ladder" if k == 1 else "k2_ladder"
            self._calibrations[k] = coarea.calibrate_c1(k, ladder_from(self.cfg["calibrate"][key]))
        return self._calibrations[k]


# suites ------------------------------------------------------------------------------

def grim_reaper_speed(margin: float = 0.3, n_vertices: int = 401, t_end: float = 0.05,
                      dt: float = 1e-5) -> float:
    """Vertical speed of the midpoint of ``y = -log cos x`` with pinned endpoints."""
    x = np.linspace(-0.5 * math.pi + margin, 0.5 * math.pi - margin, 20001)
    X = flow.resample(np.column_stack([x, -np.log(np.cos(x))]), n_vertices, closed=False)
    mid = n_vertices // 2
    Z = flow.run_open(X, t_end, dt)
    return float((Z[mid, 1] - X[mid, 1]) / t_end)


def suite_flow(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("flow")
    tol = cfg["flow"]["tolerances"]
    for label, h in ctx.histories().items():
        lengths = h.lengths
        rec = {"check": "flow", "curve": label, "tau": h.extinction_time,
               "snapshots": len(h), "embedded": h.embedded,
               "length_decreasing": bool(np.all(np.diff(lengths) < 0)),
               "mass0": h.mass0, "area0": h.area0}
        ok = rec["length_decreasing"] and (h.embedded or not h.planar)
        if h.planar:
            rates = h.area_rates() / (2 * math.pi)
            rec["area_rate_range"] = [float(rates.min()), float(rates.max())]
        if label == "circle":
            r0 = cfg["flow"]["r0"] if cfg["flow"]["curve"] == "circle" else 1.0
            oracle = 0.5 * r0 * r0
            rec.update(oracle_tau=oracle, rel_error=abs(h.extinction_time / oracle - 1))
            ok &= rec["rel_error"] <= tol["circle_tau"]
        elif label == "ellipse":
            oracle = abs(h.area0) / (2 * math.pi)
            rec.update(oracle_tau=oracle, rel_error=abs(h.extinction_time / oracle - 1))
            ok &= rec["rel_error"] <= tol["ellipse_tau"]
        rec["verdict"] = bool(ok)
        res.add(rec)
        res.add_table(f"{label}_history", ["t", "length", "area", "diameter"],
                      zip(h.times, lengths, h.areas, h.diameters))
    g = cfg["flow"]["grim_reaper"]
    speed = grim_reaper_speed(g["margin"], g["n_vertices"], g["t_end"], g["dt"])
    res.add({"check": "grim_reaper_speed", "speed": speed, "oracle": 1.0,
             "verdict": abs(speed - 1.0) <= tol["grim_speed"]})
    return res


def time_segment() -> PolyhedralChain:
    return PolyhedralChain(1, [[0.0], [1.0]], [[0, 1]], [1], [1], True)


def suite_measure(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("measure")
    ladder = ladder_from(cfg["measure"]["ladder"])
    tol = cfg["measure"]["tolerances"]
    seg = measure.par_content(time_segment(), 2, ladder)
    err = abs(seg.finest / (math.pi / 4) - 1)
    res.add({"check": "time_segment", "oracle": math.pi / 4, "finest": seg.finest,
             "extrapolated": seg.extrapolated, "rel_error": err,
             "verdict": err <= tol["time_segment"], "estimate": seg.to_dict()})
    sq = measure.par_content(box_chain([0, 0, 0], [0, 1, 1]), 3, ladder)
    ratios = np.array(sq.values[1:]) / np.array(sq.values[:-1])
    res.add({"check": "spatial_null", "values": list(sq.values), "halving_ratios": ratios,
             "extrapolated": sq.extrapolated,
             "verdict": sq.extrapolated < tol["spatial_null"] and bool(np.all(ratios < 1)),
             "estimate": sq.to_dict()})
    res.add_table("time_segment", ["delta", "content"], zip(seg.delta_ladder, seg.values))
    res.add_table("spatial_square", ["delta", "content"], zip(sq.delta_ladder, sq.values))
    return res


def suite_calibrate(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("calibrate")
    for k in (1, 2):
        cal = ctx.calibration(k)
        res.add({"check": "calibration", **cal.to_dict(),
                 "verdict": cal.spread < cfg["calibrate"]["spread_tol"]})
        res.add_table(f"c1_k{k}", ["T", "L", "angle", "c1"], cal.boxes)
    return res


def suite_coarea(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("coarea")
    c = cfg["coarea"]
    cal = ctx.calibration(1)
    sets = coarea.k1_test_sets(ctx.track("circle").chain)
    reps = coarea.coarea_matrix(sets, ladder=ladder_from(c["ladder"]))
    ratios = [r.ratio for r in reps]
    for r in reps:
        res.add(r.to_dict())
    spread = coarea.relative_spread(ratios)
    res.add({"check": "coarea_spread", "spread": spread, "mean_ratio": float(np.mean(ratios)),
             "calibrated_c1": cal.c1, "sets": len(sets), "weights": len(coarea.WEIGHTS),
             "verdict": spread < c["spread_tol"]})
    res.add_table("ratios", ["set", "weight", "lhs", "rhs", "ratio"],
                  [(r.set_name, r.weight_name, r.lhs, r.rhs, r.ratio) for r in reps])
    return res


def suite_area_formula(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("area-formula")
    a = cfg["area_formula"]
    rows = []
    for name, F in coarea.MAPS.items():
        val = F.validate(seed=cfg["seed"])
        res.add({"check": "map_validation", "map": name, **val,
                 "verdict": val["time_preserved"] and val["full_ok"] and val["horizontal_ok"]})
        if F.injective:
            rep = coarea.area_formula_check(F)
            rec = rep.to_dict()
            rec["verdict"] = abs(rep.ratio - 1) <= a["tol"]
            res.add(rec)
        else:
            try:
                coarea.area_formula_check(F)
                rejected = False
            except ValueError:
                rejected = True
            res.add({"check": "non_injective_rejected", "map": name, "verdict": rejected})
        vol = coarea.volume_estimate_check(F, tol=a["volume_tol"])
        rec = vol.to_dict()
        rec["verdict"] = vol.holds and (vol.tight if F.lipschitz_horizontal == 1.0 else True)
        res.add(rec)
        rows.append((name, vol.image_content, vol.domain_content, vol.factor))
    res.add_table("volume", ["map", "image", "domain", "factor"], rows)
    return res


def suite_monotonicity(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("monotonicity")
    m = cfg["monotonicity"]
    for label, h in ctx.histories().items():
        tau = h.extinction_time
        times = monotonicity.default_times(h, tau, m["times"])
        worst = 0.0
        ok = True
        for c in monotonicity.center_grid(h):
            rep = monotonicity.check_monotone(monotonicity.density_series(h, c, tau, times),
                                              m["rel_tol"])
            worst = max(worst, rep.max_relative_increase)
            ok &= rep.verdict
        res.add({"check": "monotone", "curve": label, "centers": 9,
                 "max_relative_increase": worst, "verdict": bool(ok)})
        s0 = monotonicity.density_series(h, monotonicity.extinction_point(h), tau, times)
        res.add_table(f"{label}_density", ["t", "theta"], zip(s0.times, s0.values))
        if label == "circle":
            dev = float(np.max(np.abs(s0.values / monotonicity.SQRT_2PI_OVER_E - 1)))
            res.add({"check": "self_shrinker_density", "curve": label,
                     "oracle": monotonicity.SQRT_2PI_OVER_E, "max_rel_deviation": dev,
                     "verdict": dev <= m["constancy_tol"]})
    return res


def filling_lower_bound(h: flow.FlowHistory) -> float:
    """Enclosed area, or for space curves the area enclosed by the planar shadow
    (projection is 1-Lipschitz, so no filling can have less mass)."""
    if h.planar:
        return abs(h.area0)
    return abs(flow.signed_area(h.points[0][:, :2]))


def scaling_exponent(chain: PolyhedralChain, s: float, lam: float, ladder) -> tuple[float, float, float]:
    base = measure.par_content(chain, s, ladder).extrapolated
    scaled = measure.par_content(push_scaling(parabolic(lam), chain), s, ladder).extrapolated
    return math.log(scaled / base) / math.log(lam), base, scaled


def suite_theorems(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("theorems")
    th = cfg["theorems"]
    for label, h in ctx.histories().items():
        tau = h.extinction_time
        upper = monotonicity.extinction_upper_bound(h.mass0)
        res.add({"check": "tau_upper_bound", "curve": label, "tau": tau, "bound": upper,
                 "verdict": tau <= upper})
        lower = monotonicity.extinction_lower_bound(filling_lower_bound(h), h.mass0)
        tr = ctx.track(label)
        rec = {"check": "theorem_A", "curve": label, "tau": tau, "bound": lower,
               "filling": "enclosed" if h.planar else "planar_shadow", "verdict": lower <= tau}
        if not h.planar:
            # swept surface fills T0 from above; the bound it gives is one-sided
            swept = track.project_spatial(tr).swept
            rec["filling_upper"] = swept
            rec["bound_from_upper"] = monotonicity.extinction_lower_bound(swept, h.mass0)
        res.add(rec)
        for a, b in ((0.0, 0.25 * tau), (0.25 * tau, 0.5 * tau), (0.0, tau)):
            for chk in track.check_projection_estimates(tr, (a, b)):
                res.add({**chk.to_dict(), "curve": label})
        chk = track.check_theorem_B(tr)
        rec = {**chk.to_dict(), "curve": label}
        rec["verdict"] = chk.verdict and rec["boundary_is_T0"]
        res.add(rec)
    if th["theorem_C"]:
        ladder = ladder_from(th["ladder"])
        tr = ctx.track("circle")
        c1 = ctx.calibration(1).c1
        rep = track.check_theorem_C(tr, c1, ladder)
        rec = rep.to_dict()
        rec["verdict"] = rep.verdict and abs(rep.agreement - 1) < th["agreement_tol"]
        res.add(rec)
        for lam in th["lambdas"]:
            lad = ladder if lam <= 1 else ladder[:-1]
            expo, base, scaled = scaling_exponent(tr.chain, 3.0, lam, lad)
            res.add({"check": "parabolic_scaling", "lambda": lam, "exponent": expo, "expected": 3,
                     "base": base, "scaled": scaled, "ladder": list(lad),
                     "verdict": abs(expo / 3 - 1) < th["exponent_tol"]})
    return res


def suite_translator(cfg: dict, ctx: Context) -> SuiteResult:
    res = SuiteResult("translator")
    t = cfg["translator"]
    r0 = t["r0"]
    rep, pcs = translator.convergence_study(r0, tuple(t["eps_fractions"]))
    rec = rep.to_dict()
    rec["verdict"] = rep.monotone and max(rep.residuals) < t["residual_tol"] and \
        all(a <= b for a, b in zip(rep.i_eps, rep.disc))
    res.add(rec)
    for p, comp in pcs:
        tag = f"eps{p.epsilon:g}"
        res.add_table(f"profile_{tag}", ["z", "r"], zip(p.grid, p.r))
        res.add_table(f"slices_{tag}", ["t", "r_eps", "r_exact", "error"],
                      zip(comp.times, comp.radius, comp.exact, comp.error))
    g = translator.grim_reaper_residual(t["scaling_eps"] * r0)
    res.add({"check": "grim_reaper_residual", "residual": g, "verdict": g < t["grim_tol"]})
    base = translator.solve_profile(r0, t["scaling_eps"] * r0)
    for lam in t["lambdas"]:
        s = translator.check_scaling_lemma(base, lam)
        rec = s.to_dict()
        rec["verdict"] = max(s.max_rel_error, s.height_rel_error, s.slices_rel_error) < t["scaling_tol"]
        res.add(rec)
    refine = [(n, base.i_eps(n, n)) for n in (8, 16, 32, 64, 128)]
    res.add({"check": "i_eps_refinement", "sequence": refine,
             "nondecreasing": all(b[1] >= a[1] for a, b in zip(refine, refine[1:])),
             "disc": translator.disc_i_eps(r0, base.epsilon)})
    return res


RUNNERS = {
    "flow": suite_flow,
    "measure": suite_measure,
    "calibrate": suite_calibrate,
    "coarea": suite_coarea,
    "area-formula": suite_area_formula,
    "monotonicity": suite_monotonicity,
    "theorems": suite_theorems,
    "translator": suite_translator,
}


def run_suite(name: str, cfg: dict, ctx: Context | None = None) -> list[SuiteResult]:
    if name != "all" and name not in RUNNERS:
        raise KeyError(f"unknown suite {name!r}")
    ctx = ctx or Context(cfg)
    names = SUITES if name == "all" else (name,)
    out = []
    for n in names:
        log.info("running suite %s", n)
        out.append(RUNNERS[n](cfg, ctx))
    return out
