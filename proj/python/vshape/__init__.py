"""Visibility shaping for broadcasters in social feeds."""

from ._vshape import (
    DomainError,
    IoError,
    Solution,
    ValidationError,
    baseline,
    gradient,
    monte_carlo_visibility,
    project_budget,
    run_cli,
    solve,
    top_k_boundaries,
    visibility,
)

__all__ = [
    "DomainError",
    "IoError",
    "Solution",
    "ValidationError",
    "baseline",
    "gradient",
    "monte_carlo_visibility",
    "project_budget",
    "run_cli",
    "solve",
    "top_k_boundaries",
    "visibility",
]
__version__ = "0.1.0"
