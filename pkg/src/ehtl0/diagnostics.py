"""Test oracles and invariant checks, kept apart from the solver API."""
from .prox import brute_force_prox_batch, brute_force_prox_oracle, random_prox_instances
from .solver import (descent_violations, finite_length_check, perturbed_descent_violations,
                     perturbed_finite_length_check,
                     perturbed_square_summability_check, square_summability_check)
from .stationarity import restricted_min_oracle, restricted_minimum

__all__ = [
    "brute_force_prox_batch",
    "brute_force_prox_oracle",
    "random_prox_instances",
    "descent_violations",
    "finite_length_check",
    "perturbed_descent_violations",
    "square_summability_check",
    "perturbed_square_summability_check",
    "perturbed_finite_length_check",
    "restricted_min_oracle",
    "restricted_minimum",
]
