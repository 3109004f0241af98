"""Wild refitting under Bregman losses."""

from ._core import (
    calibrate_rho,
    default_experiment,
    deviation_term,
    divergence,
    fixed_point_radius,
    potential_constants,
    random_design_addend,
    run_coverage,
    simulate,
    wild_refit,
    wn,
)

__all__ = [
    "calibrate_rho",
    "default_experiment",
    "deviation_term",
    "divergence",
    "fixed_point_radius",
    "potential_constants",
    "random_design_addend",
    "run_coverage",
    "simulate",
    "wild_refit",
    "wn",
]
__version__ = "0.1.0"
