"""Target Shapley effects on the 3-d Gaussian-linear problem.

The exact effects come from quadrature; we then compare a handful of
replications of the plain and importance-sampling given-data estimators.
Run: python demos/gaussian_linear.py
"""

import numpy as np

from target_shapley import ExperimentConfig, GaussianLinearSpec, gl_failure_probability, gl_target_shapley, run

spec = GaussianLinearSpec.default()
print(f"failure probability  {gl_failure_probability(spec):.4e}")
oracle = gl_target_shapley(spec)
print(f"exact effects        {np.round(oracle, 4)}")

for method, aux in (("pf-knn", "none"), ("pf-is-knn", "ce-sg"), ("dmc-knn", "none"), ("dmc-is-knn", "ce-sg")):
    rec = run(ExperimentConfig(method=method, aux=aux, n_rep=30, seed=1))
    eff = rec.effects[~np.isnan(rec.effects).any(axis=1)]
    q1, med, q3 = np.quantile(eff, [0.25, 0.5, 0.75], axis=0)
    print(f"{method:12s} median {np.round(med, 3)}  IQR {np.round(q3 - q1, 3)}")
