"""Joint sparse precision-matrix estimation across related tasks."""

from ._core import (
    FitReport,
    GroundTruth,
    MtggmError,
    SupportMetrics,
    __version__,
    eigenvalue_bounds,
    fit,
    gaussian_log_likelihood,
    generate_ground_truth,
    kl_divergence,
    l1p_norm,
    multitask_objective,
    optimality_residual,
    sample_covariance,
    sample_dataset,
    screen_blocks,
    solve_log_knapsack,
    solve_log_trust_region,
    solve_lp_separable_quadratic,
    solve_quadratic_knapsack,
    solve_trust_region_dual,
    support_metrics,
)

__all__ = [
    "FitReport",
    "GroundTruth",
    "MtggmError",
    "SupportMetrics",
    "__version__",
    "eigenvalue_bounds",
    "fit",
    "gaussian_log_likelihood",
    "generate_ground_truth",
    "kl_divergence",
    "l1p_norm",
    "multitask_objective",
    "optimality_residual",
    "sample_covariance",
    "sample_dataset",
    "screen_blocks",
    "solve_log_knapsack",
    "solve_log_trust_region",
    "solve_lp_separable_quadratic",
    "solve_quadratic_knapsack",
    "solve_trust_region_dual",
    "support_metrics",
]
