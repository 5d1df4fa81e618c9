"""The all-mappings instance: every context-to-action map is a regressor.

Every action is active in every context, so the learner keeps exploring
uniformly. Regret grows like sqrt(T); follow-the-leader has no forced
exploration and is shown for comparison.
"""

import numpy as np

from relim import BaselineKind, BaselineLearner, LearnerConfig, gen_lower_bound, run_episode
from relim.harness.streams import stream

for T in (4000, 16000):
    relim, ftl = [], []
    for s in range(10):
        inst = gen_lower_bound(stream(0, s, "instance"), N_target=64, K=4, T=T)
        cfg = LearnerConfig(delta=0.1, T=T)
        rec, _ = run_episode(inst, cfg, stream(0, s, "env"), learner_rng=stream(0, s, "learner"))
        relim.append(rec.cum_regret[-1])
        leader = BaselineLearner(inst.regressors, BaselineKind("follow_the_leader"))
        rec, _ = run_episode(inst, cfg, stream(0, s, "env"), learner_rng=stream(0, s, "learner"), learner=leader)
        ftl.append(rec.cum_regret[-1])
    eps = inst.meta["epsilon"]
    print(f"T={T:6d} eps={eps:.4f}  relim mean regret {np.mean(relim):7.2f}   follow-the-leader {np.mean(ftl):7.2f}")
