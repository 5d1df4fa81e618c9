import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import relim.learner as learner_mod
from relim.core import ActionSpace, ContextSpace, InputError, InternalError, RegressorClass, avg_squared_loss
from relim.instances import Instance, gen_random_tabular, random_nontrivial, sample_round
from relim.learner import (
    LearnerConfig,
    RegressorElimination,
    delta_t,
    elimination_radius,
    mu_value,
    run_episode,
)


def test_mu_value_examples():
    assert mu_value(2, 16) == 0.25
    assert mu_value(5, 4) == 0.1
    assert mu_value(2, 10000) == 0.01


def test_delta_t_examples():
    assert delta_t(0.2, 4, 4) == pytest.approx(1.953125e-4, rel=1e-15)
    assert delta_t(0.1, 10, 2) == pytest.approx(6.25e-4, rel=1e-15)
    assert delta_t(0.1, 10, 1) == pytest.approx(5e-3, rel=1e-15)


def test_elimination_radius_examples():
    assert elimination_radius(100, 1e-4) == pytest.approx(18 * math.log(1e4) / 100)
    assert elimination_radius(100, 1e-4) == pytest.approx(1.657861, abs=1e-6)
    assert elimination_radius(1000, 1e-4) == pytest.approx(0.1657861, abs=1e-7)
    assert elimination_radius(5, 1 - 1e-12) < 1e-11
    with pytest.raises(InputError):
        elimination_radius(0, 0.1)


def test_config_validation():
    with pytest.raises(InputError):
        LearnerConfig(delta=1.0)
    with pytest.raises(InputError):
        LearnerConfig(T=0)
    with pytest.raises(InputError):
        LearnerConfig(dist_mode="oracle")


def _learner(tables, T=100, **kw):
    rc = RegressorClass(np.asarray(tables, dtype=float))
    return RegressorElimination(rc, np.full(rc.num_contexts, 1 / rc.num_contexts), LearnerConfig(T=T, **kw))


def test_single_regressor_always_plays_its_action():
    lrn = _learner([[[0.1, 0.9, 0.3], [0.8, 0.1, 0.1]]])
    rng = np.random.default_rng(0)
    for x in (0, 1, 0):
        a, p = lrn.choose_action(x, rng)
        assert a == (1 if x == 0 else 0) and p == 1.0


def test_disagreeing_pair_is_played_evenly():
    lrn = _learner([[[1.0, 0.0]], [[0.0, 1.0]]], T=10_000)
    rng = np.random.default_rng(1)
    acts = np.array([lrn.choose_action(0, rng)[0] for _ in range(10_000)])
    assert abs(acts.mean() - 0.5) <= 0.02


def test_observe_matches_avg_squared_loss():
    inst = gen_random_tabular(4, 3, 3, 5)
    rec, state = run_episode(inst, LearnerConfig(T=200, delta=0.1), np.random.default_rng(2))
    logs = rec.logs()
    for i in range(inst.N):
        assert state.cum_sq_loss[i] / state.t == pytest.approx(avg_squared_loss(logs, inst.regressors.tables[i]))
    assert np.all(state.cum_sq_loss >= 0) and np.all(state.cum_sq_loss <= state.t)


def test_observe_exact_prediction_adds_nothing():
    lrn = _learner([[[0.5, 0.5]], [[0.5, 0.5]]])
    lrn.observe(0, 1, 0.5)
    assert np.array_equal(lrn.state.cum_sq_loss, [0.0, 0.0]) and lrn.state.t == 1
    with pytest.raises(InputError):
        lrn.observe(0, 1, 1.5)


def test_empirical_history_length():
    inst = gen_random_tabular(4, 3, 3, 5)
    _, state = run_episode(inst, LearnerConfig(T=50, dist_mode="empirical"), np.random.default_rng(0))
    assert len(state.history_contexts) == 50 == state.context_counts.sum()


def test_elimination_example(monkeypatch):
    lrn = _learner([[[0.1, 0.2]], [[0.3, 0.4]], [[0.5, 0.6]]])
    lrn.state.t = 10
    lrn.state.cum_sq_loss = np.array([0.10, 0.20, 0.50]) * 10
    monkeypatch.setattr(learner_mod, "elimination_radius", lambda t, dt: 0.25)
    assert lrn.eliminate() == 1
    assert lrn.state.active.tolist() == [True, True, False]


def test_no_elimination_when_losses_tie_or_radius_is_large(monkeypatch):
    lrn = _learner([[[0.1, 0.2]], [[0.3, 0.4]], [[0.5, 0.6]]])
    lrn.state.t = 4
    lrn.state.cum_sq_loss = np.full(3, 1.0)
    assert lrn.eliminate() == 0
    lrn.state.cum_sq_loss = np.array([0.0, 2.0, 3.96])
    monkeypatch.setattr(learner_mod, "elimination_radius", lambda t, dt: 1.0)
    assert lrn.eliminate() == 0
    # a gap of exactly 1 still fails the strict comparison
    lrn.state.cum_sq_loss = np.array([0.0, 2.0, 4.0])
    assert lrn.eliminate() == 1


def test_eliminate_before_any_round_is_an_error():
    with pytest.raises(InputError):
        _learner([[[0.1, 0.2]], [[0.3, 0.4]]]).eliminate()


def test_all_eliminated_is_internal_error(monkeypatch):
    lrn = _learner([[[0.1, 0.2]], [[0.3, 0.4]]])
    lrn.state.t = 1
    monkeypatch.setattr(learner_mod, "elimination_radius", lambda t, dt: 0.0)
    with pytest.raises(InternalError):
        lrn.eliminate()  # strict "<" with zero radius keeps nobody


def test_single_member_class_has_zero_regret():
    inst = gen_random_tabular(0, 4, 3, 2)
    solo = Instance(inst.contexts, inst.actions, RegressorClass(inst.means[None]), truth_index=0)
    rec, _ = run_episode(solo, LearnerConfig(T=300), np.random.default_rng(0))
    assert np.all(rec.instant_regret == 0.0)


def test_flat_means_give_zero_regret():
    tables = np.stack([np.full((3, 4), 0.4), np.random.default_rng(0).random((3, 4))])
    inst = Instance(ContextSpace.uniform(3), ActionSpace(4), RegressorClass(tables), truth_index=0)
    rec, _ = run_episode(inst, LearnerConfig(T=300), np.random.default_rng(0))
    assert rec.cum_regret[-1] == 0.0


def test_nontrivial_episode_eliminates_everyone_else():
    inst = random_nontrivial(3, 5, 2, 20)
    rec, state = run_episode(inst, LearnerConfig(T=6000, delta=0.1), np.random.default_rng(0))
    assert state.active.tolist() == [i == inst.truth_index for i in range(inst.N)]
    last = rec.last_elimination_round()
    assert 0 < last < 6000
    assert np.all(rec.instant_regret[last:] == 0.0)


def test_known_mode_logs_zero_iterations_between_eliminations():
    inst = gen_random_tabular(1, 4, 3, 6)
    rec, _ = run_episode(inst, LearnerConfig(T=300), np.random.default_rng(0))
    changed = np.flatnonzero(np.diff(np.concatenate([[inst.N], rec.n_active])) != 0) + 1
    idle = np.setdiff1d(np.arange(1, 300), np.concatenate([[0], changed]))
    assert np.all(rec.solver_iters[idle] == 0)


def test_audited_runs_pass_in_both_modes():
    inst = gen_random_tabular(9, 5, 4, 12)
    for mode in ("known", "empirical"):
        rec, _ = run_episode(inst, LearnerConfig(T=400, dist_mode=mode, audit=True), np.random.default_rng(1))
        assert np.all(rec.solver_violation <= rec.solver_tol)


def test_doubling_cadence_only_eliminates_at_powers_of_two():
    inst = random_nontrivial(3, 5, 2, 20)
    rec, _ = run_episode(inst, LearnerConfig(T=5000, cadence="doubling"), np.random.default_rng(0))
    drops = np.flatnonzero(np.diff(np.concatenate([[inst.N], rec.n_active])) != 0) + 1
    assert all(t & (t - 1) == 0 for t in drops)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["known", "empirical"]))
@settings(max_examples=15, deadline=None)
def test_episode_invariants(seed, mode):
    rng = np.random.default_rng(seed)
    X, K, N = int(rng.integers(1, 6)), int(rng.integers(2, 5)), int(rng.integers(2, 12))
    inst = gen_random_tabular(seed, X, K, N)
    T = 300
    cfg = LearnerConfig(T=T, delta=0.1, dist_mode=mode)
    lrn = RegressorElimination(inst.regressors, inst.contexts.weights, cfg)
    env = np.random.default_rng(seed + 1)
    prev = lrn.state.active.copy()
    for _ in range(T):
        x, r = sample_round(inst, env)
        a, prop = lrn.choose_action(x, rng)
        assert prop >= mu_value(K, T) / K
        lrn.observe(x, a, float(r[a]))
        lrn.eliminate()
        cur = lrn.state.active
        assert not np.any(cur & ~prev)  # F_t is a subset of F_{t-1}
        r_hat = lrn.state.cum_sq_loss / lrn.state.t
        masked = np.where(prev, r_hat, np.inf)
        assert cur[int(np.argmin(masked))]  # minimizer over F_{t-1} survives
        prev = cur.copy()
