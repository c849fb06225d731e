"""Numerics for the entire functions f(z) = lam * sum_{k<p} exp(omega^k z).

Zeros and critical points on the symmetry rays, inverse branches and
periodic points, hairs, and escape-time images.
"""
from ._jit import BACKEND
from .critical import (calibrate_m_hat, count_zeros_winding, find_critical_points_on_ray,
                       find_zeros_on_ray, verify_rouche)
from .errors import (BouquetError, BoundaryError, BranchViolation, CoverageViolation,
                     FamilyOverflowError, InvariantViolation, NonConvergence, ParameterError)
from .family import (FamilyParams, eval_epsilon, eval_f, eval_f_log, eval_f_prime, eval_g,
                     max_modulus)
from .geometry import RegionScheme, classify_point, make_region_scheme, strip_index, trapezium
from .hairs import E_iter, HairCurve, calibrate_hair_bounds, hair_point, trace_hair
from .render import build_m_table, classify_grid, fast_escape_test, render_image
from .symbolic import (ItinerarySpec, covering_scheme, inverse_branch, itinerary_of,
                       periodic_point, verify_covering)
from .towers import Tower

__all__ = [
    "BACKEND", "BouquetError", "BoundaryError", "BranchViolation", "CoverageViolation",
    "E_iter", "FamilyOverflowError", "FamilyParams", "HairCurve", "InvariantViolation",
    "ItinerarySpec", "NonConvergence", "ParameterError", "RegionScheme", "Tower",
    "build_m_table", "calibrate_hair_bounds", "calibrate_m_hat", "classify_grid",
    "classify_point", "count_zeros_winding", "covering_scheme", "eval_epsilon", "eval_f",
    "eval_f_log", "eval_f_prime", "eval_g", "fast_escape_test", "find_critical_points_on_ray",
    "find_zeros_on_ray", "hair_point", "inverse_branch", "itinerary_of", "make_region_scheme",
    "max_modulus", "periodic_point", "render_image", "strip_index", "trace_hair", "trapezium",
    "verify_covering", "verify_rouche",
]
