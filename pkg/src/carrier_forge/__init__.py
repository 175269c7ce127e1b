"""Numerical toolkit for minimal-length carrier graphs in hyperbolic 3-space."""

from carrier_forge.hyperbolic import (
    HPoint,
    HTangent,
    Isometry,
    angle_between,
    cosine_sum,
    dist,
    geodesic_point,
    min_angle_pair,
    tangent_toward,
)
from carrier_forge.shortening import (
    ShorteningConstants,
    ShorteningInput,
    TriodSolution,
    compute_constants,
    realize_triod,
    sh_derivative_at_zero,
    sh_gain,
    solve_a,
    solve_b,
)
from carrier_forge.graph import MetricGraph, Subgraph, collapse_tree, find_small_subgraph, girth
from carrier_forge.bound import BoundCertificate, choose_m, compute_l, verify_theorem_instance

__version__ = "0.1.0"

__all__ = [
    "HPoint",
    "HTangent",
    "Isometry",
    "angle_between",
    "cosine_sum",
    "dist",
    "geodesic_point",
    "min_angle_pair",
    "tangent_toward",
    "ShorteningConstants",
    "ShorteningInput",
    "TriodSolution",
    "compute_constants",
    "realize_triod",
    "sh_derivative_at_zero",
    "sh_gain",
    "solve_a",
    "solve_b",
    "MetricGraph",
    "Subgraph",
    "collapse_tree",
    "find_small_subgraph",
    "girth",
    "BoundCertificate",
    "choose_m",
    "compute_l",
    "verify_theorem_instance",
]
