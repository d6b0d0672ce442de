"""Maximal monotone operators, their proximal and Euler schemes, and
numerical certificates for the associated flow estimates."""

from . import analysis, certificates, operators, schemes, sets
from .analysis import asymptotic_center, classify_convergence, min_enclosing_ball
from .operators import (
    build_operator,
    dist_squared,
    normal_cone,
    quadratic,
    residual,
    resolvent,
    shifted,
    skew,
    soft_abs,
    yosida,
)
from .schemes import (
    Trajectory,
    make_schedule,
    reference_flow,
    run_euler,
    run_proximal,
    run_tikhonov_flow,
    run_yosida_flow,
)

__version__ = "0.1.0"

__all__ = [
    "Trajectory",
    "analysis",
    "asymptotic_center",
    "build_operator",
    "certificates",
    "classify_convergence",
    "dist_squared",
    "make_schedule",
    "min_enclosing_ball",
    "normal_cone",
    "operators",
    "quadratic",
    "reference_flow",
    "residual",
    "resolvent",
    "run_euler",
    "run_proximal",
    "run_tikhonov_flow",
    "run_yosida_flow",
    "schemes",
    "sets",
    "shifted",
    "skew",
    "soft_abs",
    "yosida",
]
