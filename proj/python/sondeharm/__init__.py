"""Radiosonde / satellite profile harmonization."""

from ._core import (
    SondeharmError,
    SplineFit,
    SplineKind,
    cli,
    convolve,
    default_config,
    fit_for_tolerance,
    fit_penalized,
    gev_pdf,
    kernel_rule,
    lambda_for_tolerance,
    log_uniform_grid,
    normalized_weight,
    run,
    simulate,
    tolerance_criterion,
    wmo_mandatory_levels,
)

__all__ = [
    "SondeharmError",
    "SplineFit",
    "SplineKind",
    "cli",
    "convolve",
    "default_config",
    "fit_for_tolerance",
    "fit_penalized",
    "gev_pdf",
    "kernel_rule",
    "lambda_for_tolerance",
    "log_uniform_grid",
    "normalized_weight",
    "run",
    "simulate",
    "tolerance_criterion",
    "wmo_mandatory_levels",
]
