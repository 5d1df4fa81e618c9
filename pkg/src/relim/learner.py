"""Regressor Elimination: explore over surviving regressors, drop the ones that predict badly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputError, InternalError, RegressorClass, RoundLog, squared_loss_increment
from .solver import (
    DEFAULT_REL_TOL,
    ExplorationDist,
    SolveReport,
    mixed_action_table,
    solve_exploration_dist,
)

ELIMINATION_CONSTANT = 18.0


def mu_value(K: int, T: int) -> float:
    """Smoothing mass ``min(1/(2K), 1/sqrt(T))``."""
    if K < 2 or T < 1:
        raise InputError("need K >= 2 and T >= 1")
    return min(1.0 / (2 * K), 1.0 / math.sqrt(T))


def delta_t(delta: float, N: int, t: int) -> float:
    """Per-round confidence ``delta / (2 N t^3 log2(t))``, with log2 clamped at t = 1."""
    if t < 1:
        raise InputError("t must be >= 1")
    return delta / (2 * N * t**3 * math.log2(max(t, 2)))


def elimination_radius(t: int, dt: float) -> float:
    """Excess empirical squared loss ``18 ln(1/delta_t) / t`` tolerated before elimination."""
    if t < 1 or not 0 < dt < 1:
        raise InputError("need t >= 1 and 0 < delta_t < 1")
    return ELIMINATION_CONSTANT * math.log(1.0 / dt) / t


@dataclass(frozen=True)
class LearnerConfig:
    delta: float = 0.1
    T: int = 1000
    dist_mode: str = "known"
    solver_tol: float = DEFAULT_REL_TOL
    solver_max_iters: int | None = None
    cadence: str = "every"
    audit: bool = False

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")
        if self.T < 1:
            raise InputError("T must be >= 1")
        if self.dist_mode not in ("known", "empirical"):
            raise InputError(f"dist_mode must be 'known' or 'empirical', got {self.dist_mode!r}")
        if self.cadence not in ("every", "doubling"):
            raise InputError(f"cadence must be 'every' or 'doubling', got {self.cadence!r}")
        if self.solver_tol <= 0:
            raise InputError("solver_tol must be positive")


@dataclass
class LearnerState:
    active: np.ndarray
    cum_sq_loss: np.ndarray
    t: int = 0
    history_contexts: list = field(default_factory=list)
    context_counts: np.ndarray | None = None
    current_dist: ExplorationDist | None = None
    last_report: SolveReport | None = None

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def empirical_loss(self) -> np.ndarray:
        if self.t == 0:
            raise InputError("no rounds observed yet")
        return self.cum_sq_loss / self.t


class RegressorElimination:
    """Learner over a finite regressor class.

    Each round: solve for the exploration distribution on the surviving set
    (Step 1, lazily inside :meth:`choose_action`), sample an action, ingest the
    reward with :meth:`observe` and drop regressors with :meth:`eliminate`.

    In ``known`` mode the constraint is taken under the true context weights;
    in ``empirical`` mode under the uniform distribution over the contexts seen
    in earlier rounds.
    """

    def __init__(self, regressors: RegressorClass, context_weights, config: LearnerConfig):
        self.regressors = regressors
        self.weights = np.asarray(context_weights, dtype=float)
        if self.weights.shape != (regressors.num_contexts,):
            raise InputError("context weights do not match the regressor tables")
        self.config = config
        self.K = regressors.K
        self.N = len(regressors)
        self.mu = mu_value(self.K, config.T)
        self._by_xa = regressors.by_context_action
        self.state = LearnerState(
            active=np.ones(self.N, dtype=bool),
            cum_sq_loss=np.zeros(self.N),
            context_counts=np.zeros(regressors.num_contexts, dtype=np.int64),
        )
        self._dirty = True

    @property
    def n_active(self) -> int:
        return self.state.n_active

    @property
    def last_report(self) -> SolveReport | None:
        return self.state.last_report

    def _warm_start(self, members: np.ndarray) -> np.ndarray | None:
        dist = self.state.current_dist
        if dist is None:
            return None
        prev = np.zeros(self.N)
        prev[dist.members] = dist.probs
        return prev[members]

    def prepare_round(self) -> SolveReport:
        """Step 1: make sure the exploration distribution is solved for the coming round."""
        st = self.state
        members = np.flatnonzero(st.active)
        policies = self.regressors.argmax_policy[members]
        empirical = self.config.dist_mode == "empirical"
        if empirical and st.t == 0:
            probs = np.full(members.size, 1.0 / members.size)
            table = mixed_action_table(probs, policies, self.mu, self.K)
            st.current_dist = ExplorationDist(probs=probs, mu=self.mu, action_dists=table, members=members)
            st.last_report = SolveReport(iterations=0, final_violation=0.0, bound=float("nan"), converged=True)
            return st.last_report
        if not empirical and not self._dirty:
            prev = st.last_report
            st.last_report = SolveReport(
                iterations=0,
                final_violation=prev.final_violation,
                bound=prev.bound,
                converged=True,
                tol=prev.tol,
            )
            return st.last_report
        weights = st.context_counts / st.t if empirical else self.weights
        dist, report = solve_exploration_dist(
            policies,
            weights,
            self.mu,
            self.K,
            max_iters=self.config.solver_max_iters,
            warm_start=self._warm_start(members),
            rel_tol=self.config.solver_tol,
        )
        st.current_dist = ExplorationDist(
            probs=dist.probs, mu=dist.mu, action_dists=dist.action_dists, members=members
        )
        if self.config.audit:
            self._audit(policies, weights, dist, report)
        st.last_report = report
        self._dirty = False
        return report

    def _audit(self, policies, weights, dist, report) -> None:
        """Recompute the worst constraint slack with a naive double loop and compare."""
        X = policies.shape[1]
        worst = -math.inf
        for pol in policies:
            total = 0.0
            for x in range(X):
                if weights[x] > 0:
                    total += weights[x] / dist.action_dists[x, pol[x]]
            worst = max(worst, total)
        audited = worst - report.bound
        if audited > report.tol or abs(audited - report.final_violation) > 1e-9 * max(1.0, report.bound):
            raise InternalError(
                f"audit failed at t={self.state.t}: violation {audited:.3e}, solver reported "
                f"{report.final_violation:.3e}, tol {report.tol:.3e}"
            )

    def choose_action(self, x: int, rng: np.random.Generator) -> tuple[int, float]:
        """Steps 1-2: sample ``a ~ P'(. | x)``; returns the action and its propensity."""
        self.prepare_round()
        row = self.state.current_dist.action_dists[x]
        cdf = np.cumsum(row)
        a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        a = min(a, self.K - 1)
        return a, float(row[a])

    def observe(self, x: int, a: int, reward: float) -> None:
        """Step 3: add this round's squared error to every regressor's running loss."""
        if not 0.0 <= reward <= 1.0:
            raise InputError(f"reward {reward} outside [0, 1]")
        st = self.state
        st.cum_sq_loss += squared_loss_increment(self._by_xa[x, a], reward)
        st.t += 1
        if self.config.dist_mode == "empirical":
            st.history_contexts.append(x)
            st.context_counts[x] += 1
            self._dirty = True

    def eliminate(self) -> int:
        """Step 4: keep f only if its empirical loss is below the best active loss plus the radius.

        Returns the number of regressors removed this round.
        """
        st = self.state
        t = st.t
        if t < 1:
            raise InputError("eliminate needs at least one observed round")
        if self.config.cadence == "doubling" and t & (t - 1):
            return 0
        r_hat = st.cum_sq_loss / t
        best = r_hat[st.active].min()
        radius = elimination_radius(t, delta_t(self.config.delta, self.N, t))
        keep = st.active & (r_hat < best + radius)
        if not keep.any():
            raise InternalError("every regressor eliminated")
        removed = st.n_active - int(keep.sum())
        if removed:
            st.active = keep
            self._dirty = True
        return removed


@dataclass
class RunRecord:
    """Per-round columns of one episode."""

    context: np.ndarray
    action: np.ndarray
    propensity: np.ndarray
    reward: np.ndarray
    instant_regret: np.ndarray
    n_active: np.ndarray
    solver_iters: np.ndarray
    solver_violation: np.ndarray
    solver_tol: np.ndarray | None = None
    initial_active: int | None = None

    @classmethod
    def empty(cls, T: int) -> "RunRecord":
        return cls(
            context=np.zeros(T, dtype=np.int64),
            action=np.zeros(T, dtype=np.int64),
            propensity=np.zeros(T),
            reward=np.zeros(T),
            instant_regret=np.zeros(T),
            n_active=np.zeros(T, dtype=np.int64),
            solver_iters=np.zeros(T, dtype=np.int64),
            solver_violation=np.zeros(T),
            solver_tol=np.zeros(T),
        )

    def __len__(self) -> int:
        return self.context.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.instant_regret)

    def logs(self) -> list[RoundLog]:
        return [
            RoundLog(t=i + 1, context=int(x), action=int(a), reward=float(r), instant_regret=float(g))
            for i, (x, a, r, g) in enumerate(zip(self.context, self.action, self.reward, self.instant_regret))
        ]

    def last_elimination_round(self) -> int:
        """Round (1-based) whose elimination step last shrank the active set; 0 if none did."""
        start = self.n_active[0] if self.initial_active is None else self.initial_active
        counts = np.concatenate([[start], self.n_active])
        drops = np.flatnonzero(np.diff(counts) != 0)
        return int(drops[-1] + 1) if drops.size else 0


def run_episode(instance, config: LearnerConfig, rng, learner_rng=None, learner=None):
    """Play ``config.T`` rounds on ``instance``.

    ``rng`` drives contexts and rewards; ``learner_rng`` (default: ``rng``)
    drives action sampling, so two learners can share an identical environment
    stream. ``learner`` defaults to Regressor Elimination over the instance's
    class and known context weights.

    Returns ``(RunRecord, learner_state)``. ``n_active`` is logged after the
    round's elimination step.
    """
    if learner is None:
        learner = RegressorElimination(instance.regressors, instance.contexts.weights, config)
    if learner.K != instance.K:
        raise InputError("learner and instance disagree on K")
    learner_rng = rng if learner_rng is None else learner_rng
    from .instances import sample_round

    rec = RunRecord.empty(config.T)
    rec.initial_active = learner.n_active
    for i in range(config.T):
        x, rewards = sample_round(instance, rng)
        a, prop = learner.choose_action(x, learner_rng)
        r = float(rewards[a])
        learner.observe(x, a, r)
        learner.eliminate()
        report = learner.last_report
        rec.context[i] = x
        rec.action[i] = a
        rec.propensity[i] = prop
        rec.reward[i] = r
        rec.instant_regret[i] = instance.optimal_values[x] - instance.means[x, a]
        rec.n_active[i] = learner.n_active
        rec.solver_iters[i] = report.iterations if report is not None else 0
        rec.solver_violation[i] = report.final_violation if report is not None else 0.0
        rec.solver_tol[i] = report.tol if report is not None else 0.0
    return rec, learner.state
