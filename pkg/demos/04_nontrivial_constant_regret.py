"""Every wrong regressor mispredicts by a constant gap, so all are removed early.

After the last elimination only the truth remains and regret stops growing;
doubling the horizon barely changes the total.
"""

import numpy as np

from relim import LearnerConfig, random_nontrivial, run_episode
from relim.harness.streams import stream

for T in (20_000, 40_000):
    finals, lasts = [], []
    for s in range(5):
        inst = random_nontrivial(stream(1, s, "instance"), num_contexts=5, K=2, N=20)
        rec, state = run_episode(inst, LearnerConfig(delta=0.1, T=T), stream(1, s, "env"),
                                 learner_rng=stream(1, s, "learner"))
        assert state.n_active == 1 and state.active[inst.truth_index]
        finals.append(rec.cum_regret[-1])
        lasts.append(rec.last_elimination_round())
    print(f"T={T}: mean final regret {np.mean(finals):.3f}, last elimination rounds {lasts}")
