"""Extrapolated hard thresholding for box-constrained l0-penalized problems."""
from .problem import (BoxConstraint, PenaltyWeights, SparseProblem, QuadraticObjective,
                      LeastSquaresObjective, LogisticObjective, CallableObjective,
                      composite_value, support, spectral_norm, make_example1,
                      make_least_squares, make_logistic, load_problem, save_problem)
from .prox import CoordinateProxProblem, ProxResult, prox_coordinate, prox_vector
from .stationarity import check_eps_local_min, mixed_regime_check, restricted_min_oracle
from .solver import SolverConfig, SolveResult, ConfigError, default_gamma, validate_config, solve
from .baselines import BaselineConfig, iht_solve, eht_fista_solve, aht_solve

__version__ = "0.1.0"
