"""Parabolic geometric measure theory lab coupled to curve-shortening flow."""

from __future__ import annotations

from .coarea import (MAPS, VerticalMap, area_formula_check, calibrate_c1, coarea_lhs, coarea_ratio,
                     coarea_rhs, horizontal_jacobian, volume_estimate_check)
from .flow import FlowHistory, FlowOptions, make_curve, run_to_extinction
from .geometry import (PolyhedralChain, ScalingMap, SpaceTimePoint, chain_boundary, chain_mass,
                       cylindrical, euclidean, par_dist, parabolic, push_scaling)
from .measure import MeasureEstimate, ParabolicBox, par_content, par_grid_cover, slice_at_time
from .monotonicity import (density_series, extinction_lower_bound, extinction_squeeze,
                           extinction_upper_bound, gaussian_density)
from .report import SuiteResult, emit_report
from .track import (SpaceTimeTrack, build_track, check_projection_estimates, check_theorem_B,
                    check_theorem_C, project_spatial)
from .translator import (TranslatorProfile, check_scaling_lemma, el_residual, i_eps_functional,
                         rescaled_slices, solve_profile)

__version__ = "0.1.0"

__all__ = [
    "MAPS", "FlowHistory", "FlowOptions", "MeasureEstimate", "ParabolicBox", "PolyhedralChain",
    "ScalingMap", "SpaceTimePoint", "SpaceTimeTrack", "SuiteResult", "TranslatorProfile",
    "VerticalMap", "area_formula_check", "build_track", "calibrate_c1", "chain_boundary",
    "chain_mass", "check_projection_estimates", "check_scaling_lemma", "check_theorem_B", "check_theorem_C",
    "coarea_lhs", "coarea_ratio", "coarea_rhs", "cylindrical", "density_series", "el_residual",
    "emit_report", "euclidean", "extinction_lower_bound", "extinction_squeeze",
    "extinction_upper_bound", "gaussian_density", "horizontal_jacobian", "i_eps_functional",
    "make_curve", "par_content", "par_dist", "par_grid_cover", "parabolic", "project_spatial",
    "push_scaling", "rescaled_slices", "run_to_extinction", "slice_at_time", "solve_profile",
    "volume_estimate_check",
]
