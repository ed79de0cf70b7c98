"""
Checking a point for local optimality
=====================================

For a penalized problem a point is locally optimal when the gradient
vanishes on its support and respects the box (and the sign restrictions
at zero) everywhere else. ``check_eps_local_min`` reports which coordinates
fail; a passing point can be double checked by minimizing f on the set the
point is allowed to move in.
"""

import numpy as np

from ehtl0 import SolverConfig, default_gamma, solve
from ehtl0.bench import TrialSpec, gen_example2
from ehtl0.stationarity import check_eps_local_min, restricted_min_oracle

problem, x_true = gen_example2(TrialSpec(2, m=60, n=20, spar=0.2, seed=3))
Lf = problem.lipschitz

cfg = SolverConfig(0.0, 0.01, 10.0, 2 * default_gamma(10.0, 0.01, Lf), 1e-11, 20000)
res = solve(problem, cfg, np.ones(problem.dimension))
report = check_eps_local_min(problem, res.x_final, 0.0, atol=1e-10)
print("certified:", report.satisfied, "support:", np.flatnonzero(res.x_final))
print("confirmed by restricted minimization:", restricted_min_oracle(problem, res.x_final, 1e-6))

###############################################################################
# The true signal itself is not stationary: noise moves the minimizer

print(check_eps_local_min(problem, x_true, 1e-3).to_json()[:200], "...")
