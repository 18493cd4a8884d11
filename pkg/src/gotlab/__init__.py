"""gotlab: exact optimal transport between discrete measures, certificates
for the uniqueness and robustness of optimal matchings, and Monte Carlo
mapping of the Gaussian-smoothing gap.

Public surface:

* measures:   DiscreteMeasure, Translation, load/serialize, translate
* exact OT:   solve_w2, brute_force_w2, is_unique_optimal,
              second_best_matching_cost
* certify:    check_cyclical_monotonicity, solve_potentials,
              max_quadratic_lambda, check_convex_smooth,
              implied_convexity_constants
* robustness: verify_eps_robust, estimate_r, estimate_G, g_profile,
              robustness_lb_general / _convex / _simplified,
              robustness_report
* smoothing:  SmoothingKernel, sample_smoothed, empirical_w2, got_estimate,
              gap_curve, exp_bound, linear_lb_check, local_invariance_check
"""

from .errors import CapabilityError, UsageError
from .measures import (
    DiscreteMeasure,
    MeasureFormatError,
    Translation,
    load_measure,
    loads_measure,
    serialize_measure,
    translate,
    uniform_measure,
)
from .exact_ot import (
    BruteForceResult,
    Matching,
    OTSolution,
    TransportPlan,
    brute_force_w2,
    is_unique_optimal,
    second_best_matching_cost,
    solve_w2,
    squared_distances,
)
from .certify import (
    MonotonicityResult,
    PotentialCertificate,
    ResidualFunction,
    check_convex_smooth,
    check_cyclical_monotonicity,
    implied_convexity_constants,
    max_quadratic_lambda,
    solve_potentials,
)
from .robustness import (
    GProfile,
    RobustnessReport,
    RobustnessWitness,
    VerifyResult,
    estimate_G,
    estimate_r,
    g_profile,
    robustness_lb_convex,
    robustness_lb_general,
    robustness_lb_simplified,
    robustness_report,
    verify_eps_robust,
)
from .smoothing import (
    GapRecord,
    GotEstimate,
    LinearLbResult,
    LocalInvarianceResult,
    PointCloud,
    SmoothingKernel,
    empirical_w2,
    exp_bound,
    gap_curve,
    got_estimate,
    linear_lb_check,
    local_invariance_check,
    sample_smoothed,
    split_seed,
)
from .presets import Preset, get_preset, preset_names

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "UsageError",
    "DiscreteMeasure",
    "MeasureFormatError",
    "Translation",
    "load_measure",
    "loads_measure",
    "serialize_measure",
    "translate",
    "uniform_measure",
    "BruteForceResult",
    "Matching",
    "OTSolution",
    "TransportPlan",
    "brute_force_w2",
    "is_unique_optimal",
    "second_best_matching_cost",
    "solve_w2",
    "squared_distances",
    "MonotonicityResult",
    "PotentialCertificate",
    "ResidualFunction",
    "check_convex_smooth",
    "check_cyclical_monotonicity",
    "implied_convexity_constants",
    "max_quadratic_lambda",
    "solve_potentials",
    "GProfile",
    "RobustnessReport",
    "RobustnessWitness",
    "VerifyResult",
    "estimate_G",
    "estimate_r",
    "g_profile",
    "robustness_lb_convex",
    "robustness_lb_general",
    "robustness_lb_simplified",
    "robustness_report",
    "verify_eps_robust",
    "GapRecord",
    "GotEstimate",
    "LinearLbResult",
    "LocalInvarianceResult",
    "PointCloud",
    "SmoothingKernel",
    "empirical_w2",
    "exp_bound",
    "gap_curve",
    "got_estimate",
    "linear_lb_check",
    "local_invariance_check",
    "sample_smoothed",
    "split_seed",
    "Preset",
    "get_preset",
    "preset_names",
    "__version__",
]
