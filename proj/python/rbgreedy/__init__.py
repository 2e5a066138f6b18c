"""Weak greedy reduced bases for a parametric diffusion problem, trained on random parameter sets."""

from ._core import (
    BasisLoadError,
    BreakdownError,
    NumericalFailure,
    Operator,
    ReducedBasis,
    ResourceError,
    chebyshev_eval,
    christoffel_sum,
    coefficient_value,
    compute_m,
    compute_n,
    hyperbolic_cross,
    is_downward_closed,
    legendre_eval,
    make_budget,
    run_certified,
    run_experiment,
    run_scheduled,
    sample,
)

__all__ = [
    "BasisLoadError",
    "BreakdownError",
    "NumericalFailure",
    "Operator",
    "ReducedBasis",
    "ResourceError",
    "chebyshev_eval",
    "christoffel_sum",
    "coefficient_value",
    "compute_m",
    "compute_n",
    "hyperbolic_cross",
    "is_downward_closed",
    "legendre_eval",
    "make_budget",
    "run_certified",
    "run_experiment",
    "run_scheduled",
    "sample",
]
