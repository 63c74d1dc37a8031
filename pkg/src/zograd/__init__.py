"""zograd: zeroth-order gradient estimation and its minimax verification.

Estimate gradients from noisy black-box evaluations with finite-difference
designs, compute the closed-form minimax risk bounds that govern them, build
the adversarial functions that attain those bounds, and measure everything
with a deterministic Monte Carlo harness.
"""

from .core import (
    FunctionClassSpec,
    NoiseSpec,
    Oracle,
    default_probe_grid,
    oracle_sample,
    remainder_violation,
)
from .errors import (
    BudgetError,
    DegenerateError,
    DistributionContractError,
    InputError,
    NoiseContractError,
    ZogradError,
)
from .estimators import (
    LinearDesign,
    MomentReport,
    SPConfig,
    cfd_design_1d,
    cfd_design_multi,
    forward_difference_design,
    linear_estimate,
    moment_conditions,
    optimal_delta,
    sp_estimate,
)
from .risk import (
    BoundQuery,
    MinIntegral,
    WorstCaseRisk,
    bounds_table,
    cfd_worst_case_mse,
    exact_worst_case_risk_linear,
    general_minimax_lower,
    kl_gaussian,
    le_cam_bound,
    le_cam_max,
    linear_minimax_lower,
    min_integral_gaussian,
)
from .verify import (
    BlowupPoint,
    BruteForceResult,
    BruteForceSearch,
    RateFit,
    RiskReport,
    best_ffd_delta,
    brute_force_linear_minimax,
    ffd_benchmark_mse,
    mc_mse,
    rate_fit,
    sp_blowup_curve,
)
from .worstcase import (
    ExtremalFunction,
    SpikeAdversary,
    f_star_1d,
    f_star_multi,
    inverse_modulus,
    same_sign_spike_adversary,
    spike_adversary,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupPoint",
    "BoundQuery",
    "BruteForceResult",
    "BruteForceSearch",
    "BudgetError",
    "DegenerateError",
    "DistributionContractError",
    "ExtremalFunction",
    "FunctionClassSpec",
    "InputError",
    "LinearDesign",
    "MinIntegral",
    "MomentReport",
    "NoiseContractError",
    "NoiseSpec",
    "Oracle",
    "RateFit",
    "RiskReport",
    "SPConfig",
    "SpikeAdversary",
    "WorstCaseRisk",
    "ZogradError",
    "best_ffd_delta",
    "bounds_table",
    "brute_force_linear_minimax",
    "cfd_design_1d",
    "cfd_design_multi",
    "cfd_worst_case_mse",
    "default_probe_grid",
    "exact_worst_case_risk_linear",
    "f_star_1d",
    "f_star_multi",
    "ffd_benchmark_mse",
    "forward_difference_design",
    "general_minimax_lower",
    "inverse_modulus",
    "kl_gaussian",
    "le_cam_bound",
    "le_cam_max",
    "linear_estimate",
    "linear_minimax_lower",
    "mc_mse",
    "min_integral_gaussian",
    "moment_conditions",
    "optimal_delta",
    "oracle_sample",
    "rate_fit",
    "remainder_violation",
    "same_sign_spike_adversary",
    "sp_blowup_curve",
    "sp_estimate",
    "spike_adversary",
]
