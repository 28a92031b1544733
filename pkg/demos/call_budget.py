"""Where the limit-state evaluations go in given-model estimation.

Counts calls with an instrumented problem and shows the saving obtained by
reusing the normaliser sample as first inner draw.
Run: python demos/call_budget.py
"""

from target_shapley import ExperimentConfig, gaussian_linear, run

for method in ("dmc-is-given-model", "pf-is-given-model"):
    for reuse in (False, True):
        problem, counter = gaussian_linear().counted()
        rec = run(ExperimentConfig(method=method, n_rep=1, seed=4, reuse=reuse), problem)
        b = rec.budget
        print(
            f"{method:19s} reuse={reuse!s:5s} N_O={b['n_outer']:4d} "
            f"calls: CE {rec.calls['ce']}, estimation {rec.calls['per_replication'][0]}, counted {counter.calls}"
        )
