"""
Recovering a sparse vector from noisy measurements
==================================================

Least squares with an l0 penalty on the box [-1, 5]. Compare the damped
solver with iterative hard thresholding on a few random instances.
"""

import numpy as np

from ehtl0.bench import TrialSpec, run_trial

rows = []
for trial in range(5):
    for sr, res, met in run_trial(TrialSpec(2, m=200, n=40, spar=0.2, seed=1, trial=trial)):
        rows.append((sr.name, res.iterations, met["rel_err"], met["spa_rat"]))

###############################################################################
# Mean iterations, relative error and support agreement per solver

for name in dict.fromkeys(r[0] for r in rows):
    its, err, spa = np.array([r[1:] for r in rows if r[0] == name]).T
    print(f"{name:15s} iterations {its.mean():7.1f}  rel_err {err.mean():.4f}  spa_rat {spa.mean():.3f}")
