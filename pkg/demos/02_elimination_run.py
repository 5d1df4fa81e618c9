"""One Regressor Elimination episode on a random tabular instance.

Watch the active set shrink and the cumulative regret flatten out.
"""

import numpy as np

from relim import LearnerConfig, gen_random_tabular, run_episode

inst = gen_random_tabular(seed=7, num_contexts=10, K=5, N=50)
rec, state = run_episode(inst, LearnerConfig(delta=0.1, T=10_000), np.random.default_rng(7))

print(f"truth index {inst.truth_index}; survivors {np.flatnonzero(state.active).tolist()}")
for t in (100, 1000, 2500, 5000, 10_000):
    print(f"t={t:6d}  active={rec.n_active[t - 1]:3d}  cum_regret={rec.cum_regret[t - 1]:8.2f}")
print(f"last elimination at round {rec.last_elimination_round()}")
print(f"solver iterations across the episode: {rec.solver_iters.sum()}")
