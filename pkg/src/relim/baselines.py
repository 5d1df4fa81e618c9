"""Reference learners sharing Regressor Elimination's loss accounting but not its elimination."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InputError, RegressorClass, squared_loss_increment

KINDS = ("uniform", "epsilon_greedy", "follow_the_leader")


@dataclass(frozen=True)
class BaselineKind:
    kind: str
    epsilon_c: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown baseline {self.kind!r}; expected one of {KINDS}")
        if self.epsilon_c < 0:
            raise InputError("epsilon_c must be non-negative")

    @classmethod
    def parse(cls, spec: str) -> "BaselineKind":
        """Parse ``"uniform"``, ``"follow_the_leader"`` or ``"epsilon_greedy[:c=<float>]"``."""
        name, _, opts = spec.partition(":")
        if not opts:
            return cls(name)
        key, _, value = opts.partition("=")
        if name != "epsilon_greedy" or key != "c":
            raise InputError(f"cannot parse baseline spec {spec!r}")
        try:
            return cls(name, float(value))
        except ValueError as exc:
            raise InputError(f"bad epsilon constant in {spec!r}") from exc


@dataclass
class BaselineState:
    cum_sq_loss: np.ndarray
    t: int = 0


class BaselineLearner:
    """Uniform play, follow-the-leader, or epsilon-greedy around the leader.

    The leader is the regressor with the smallest running squared loss
    (lowest index on ties); it plays its argmax action. Epsilon-greedy explores
    uniformly with probability ``min(1, c (K ln N / t)^(1/3))``.
    """

    def __init__(self, regressors: RegressorClass, kind: BaselineKind):
        self.regressors = regressors
        self.kind = kind
        self.K = regressors.K
        self.N = len(regressors)
        self._by_xa = regressors.by_context_action
        self.state = BaselineState(cum_sq_loss=np.zeros(self.N))
        self.last_report = None

    @property
    def n_active(self) -> int:
        return self.N

    def epsilon(self) -> float:
        t = max(self.state.t, 1)
        return min(1.0, self.kind.epsilon_c * (self.K * math.log(self.N) / t) ** (1.0 / 3.0))

    def leader_action(self, x: int) -> int:
        leader = int(np.argmin(self.state.cum_sq_loss))
        return int(self.regressors.argmax_policy[leader, x])

    def choose_action(self, x: int, rng: np.random.Generator) -> tuple[int, float]:
        kind = self.kind.kind
        if kind == "uniform":
            return int(rng.integers(self.K)), 1.0 / self.K
        greedy = self.leader_action(x)
        if kind == "follow_the_leader":
            return greedy, 1.0
        eps = self.epsilon()
        if rng.random() < eps:
            a = int(rng.integers(self.K))
        else:
            a = greedy
        return a, eps / self.K + (1.0 - eps) * (a == greedy)

    def observe(self, x: int, a: int, reward: float) -> None:
        if not 0.0 <= reward <= 1.0:
            raise InputError(f"reward {reward} outside [0, 1]")
        self.state.cum_sq_loss += squared_loss_increment(self._by_xa[x, a], reward)
        self.state.t += 1

    def eliminate(self) -> int:
        return 0


def baseline_choose(learner: BaselineLearner, x: int, rng: np.random.Generator) -> int:
    return learner.choose_action(x, rng)[0]


def baseline_observe(learner: BaselineLearner, x: int, a: int, reward: float) -> BaselineState:
    learner.observe(x, a, reward)
    return learner.state
