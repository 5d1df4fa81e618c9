"""Solving for an exploration distribution.

Three regressors over one context: two pick action 0, one picks action 1.
Uniform weight on the regressors would play action 0 twice as often, so the
rarely-chosen action's inverse propensity blows past the budget. The solver
moves mass until every surviving policy's action is sampled often enough.
"""

import numpy as np

from relim.solver import max_violation, solve_exploration_dist

policies = np.array([[0], [0], [1]])
weights = np.array([1.0])
mu = 0.1

v, witness = max_violation(np.full(3, 1 / 3), policies, weights, mu, K=2)
print(f"uniform P: worst excess inverse propensity {v:.4f} (regressor {witness})")

dist, report = solve_exploration_dist(policies, weights, mu, K=2)
print(f"solved P = {np.round(dist.probs, 6)}  after {report.iterations} iterations")
print(f"P'(.|x) = {np.round(dist.action_dists[0], 6)}, bound E|A| = {report.bound}")
print(f"final violation {report.final_violation:.2e} <= tol {report.tol:.2e}")

# A larger random problem: 40 policies, 12 contexts, 6 actions.
rng = np.random.default_rng(0)
pols = rng.integers(6, size=(40, 12))
w = rng.dirichlet(np.ones(12))
dist, report = solve_exploration_dist(pols, w, mu=0.01, K=6)
print(f"random problem: {report.iterations} iterations, relative violation "
      f"{report.final_violation / report.bound:.1e}, support {np.count_nonzero(dist.probs)}/40")
