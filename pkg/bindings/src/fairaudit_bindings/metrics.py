"""The metric suite over plain arrays, re-exported from the core unchanged."""

from fairaudit.metrics import (
    GammaDisparity,
    Interval,
    ParityReport,
    Strata,
    bootstrap_ci,
    build_strata,
    conditional_estimation_disparity,
    conditional_statistical_parity_gap,
    gamma_group_disparity,
    group_gap_ci,
    parity_report,
    statistical_parity_gap,
    stratified_gap_ci,
    target_mismatch_gamma,
)

__all__ = [
    "GammaDisparity",
    "Interval",
    "ParityReport",
    "Strata",
    "bootstrap_ci",
    "build_strata",
    "conditional_estimation_disparity",
    "conditional_statistical_parity_gap",
    "gamma_group_disparity",
    "group_gap_ci",
    "parity_report",
    "statistical_parity_gap",
    "stratified_gap_ci",
    "target_mismatch_gamma",
]
