import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relim.core import InputError, InternalError
from relim.solver import (
    ConvergenceError,
    constraint_bound,
    default_max_iters,
    max_violation,
    mixed_action_dist,
    mixed_action_table,
    solve_exploration_dist,
)


def naive_action_dist(P, policies, x, mu, K):
    """P'(.|x) straight from the definition, one regressor at a time."""
    acts = sorted({int(p[x]) for p in policies})
    out = [0.0] * K
    for a in acts:
        out[a] = mu / len(acts)
    for p, pol in zip(P, policies):
        out[int(pol[x])] += (1 - mu) * p
    return np.array(out)


def naive_inverse_propensities(P, policies, weights, mu, K):
    vals = []
    for pol in policies:
        total = 0.0
        for x, w in enumerate(weights):
            if w > 0:
                total += w / naive_action_dist(P, policies, x, mu, K)[int(pol[x])]
        vals.append(total)
    return np.array(vals)


def test_mixed_action_dist_examples():
    assert np.array_equal(mixed_action_dist([1.0], [[2]], 0, 0.3, 3), [0.0, 0.0, 1.0])
    for mu in (0.0, 0.1, 0.5):
        assert np.allclose(mixed_action_dist([0.5, 0.5], [[0], [1]], 0, mu, 2), [0.5, 0.5])
    assert np.allclose(mixed_action_dist([1.0, 0.0], [[0], [1]], 0, 0.1, 2), [0.95, 0.05])
    with pytest.raises(InputError):
        mixed_action_dist([1.0], [[0]], 1, 0.1, 2)


def test_max_violation_examples():
    assert max_violation([1.0], [[1, 0]], [0.5, 0.5], 0.1, 2)[0] == 0.0
    v, _ = max_violation([0.5, 0.5], [[0], [1]], [1.0], 0.1, 2)
    assert v == pytest.approx(0.0, abs=1e-15)
    pols = [[0], [0], [1]]
    assert max_violation([0.25, 0.25, 0.5], pols, [1.0], 0.0, 2)[0] == pytest.approx(0.0, abs=1e-15)
    v, witness = max_violation([1 / 3, 1 / 3, 1 / 3], pols, [1.0], 0.0, 2)
    assert v == pytest.approx(1.0) and witness == 2  # 1/(1/3) - 2


def test_max_violation_zero_propensity_is_internal_error():
    with pytest.raises(InternalError):
        max_violation([1.0, 0.0], [[0], [1]], [1.0], 0.0, 2)


def test_solver_singleton_and_symmetric_pair():
    dist, rep = solve_exploration_dist([[1, 0, 2]], [0.2, 0.3, 0.5], 0.1, 3)
    assert rep.iterations == 0 and rep.converged and np.array_equal(dist.probs, [1.0])
    dist, rep = solve_exploration_dist([[0], [1]], [1.0], 0.1, 2)
    assert np.allclose(dist.probs, 0.5, atol=1e-6) and rep.final_violation <= rep.tol


def test_solver_three_regressor_closed_form():
    dist, rep = solve_exploration_dist([[0], [0], [1]], [1.0], 0.1, 2)
    # (1 - mu) P(f3) + mu/2 = 1/2  =>  P(f3) = 1/2
    assert dist.probs[2] == pytest.approx(0.5, abs=1e-6)
    assert dist.action_dists[0] == pytest.approx([0.5, 0.5], abs=1e-6)


def test_solver_rejects_bad_inputs():
    with pytest.raises(InputError):
        solve_exploration_dist([[0], [1]], [1.0], 0.0, 2)  # mu must be positive here
    with pytest.raises(InputError):
        solve_exploration_dist([[0], [1]], [0.5, 0.6], 0.1, 2)
    with pytest.raises(InputError):
        solve_exploration_dist([[0], [3]], [1.0], 0.1, 2)


def test_convergence_error_carries_report():
    rng = np.random.default_rng(3)
    pols = rng.integers(6, size=(40, 12))
    with pytest.raises(ConvergenceError) as info:
        solve_exploration_dist(pols, np.full(12, 1 / 12), 0.01, 6, max_iters=1, tol=1e-14)
    assert not info.value.report.converged and info.value.report.iterations == 1


def test_default_max_iters():
    assert default_max_iters(1) == 35  # ceil(50 ln 2)
    assert default_max_iters(10) == 1199


def _random_problem(seed):
    rng = np.random.default_rng(seed)
    X, K, n = rng.integers(1, 21), rng.integers(2, 11), rng.integers(1, 51)
    pols = rng.integers(K, size=(n, X))
    w = rng.dirichlet(np.ones(X))
    if rng.random() < 0.3:
        w[rng.random(X) < 0.3] = 0.0
        w = w / w.sum() if w.sum() > 0 else np.full(X, 1 / X)
    mu = float(rng.uniform(1e-3, 0.5))
    return pols, w, mu, int(K)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_solution_feasible_and_audit_matches(seed):
    pols, w, mu, K = _random_problem(seed)
    dist, rep = solve_exploration_dist(pols, w, mu, K)
    assert rep.converged and rep.final_violation <= rep.tol
    assert rep.tol == pytest.approx(1e-6 * constraint_bound(pols, w, K))
    naive = naive_inverse_propensities(dist.probs, pols, w, mu, K)
    assert abs((naive.max() - rep.bound) - rep.final_violation) <= 1e-9 * max(1.0, rep.bound)
    assert max_violation(dist.probs, pols, w, mu, K)[0] == pytest.approx(rep.final_violation, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_exploration_dist_invariants(seed):
    pols, w, mu, K = _random_problem(seed)
    dist, _ = solve_exploration_dist(pols, w, mu, K)
    assert abs(dist.probs.sum() - 1.0) <= 1e-12 and np.all(dist.probs >= 0)
    for x in range(pols.shape[1]):
        row = dist.action_dists[x]
        acts = set(pols[:, x].tolist())
        assert abs(row.sum() - 1.0) <= 1e-9
        for a in range(K):
            if a in acts:
                assert row[a] >= mu / len(acts) - 1e-15
            else:
                assert row[a] == 0.0
        assert np.allclose(row, naive_action_dist(dist.probs, pols, x, mu, K), atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_trace_is_non_increasing(seed):
    pols, w, mu, K = _random_problem(seed)
    try:
        _, rep = solve_exploration_dist(pols, w, mu, K, rel_tol=1e-10)
    except ConvergenceError as exc:
        rep = exc.report
    assert all(b <= a + 1e-9 for a, b in zip(rep.trace, rep.trace[1:]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_warm_start_from_a_solution_is_immediate(seed):
    pols, w, mu, K = _random_problem(seed)
    dist, _ = solve_exploration_dist(pols, w, mu, K)
    again, rep = solve_exploration_dist(pols, w, mu, K, warm_start=dist.probs)
    assert rep.iterations == 0 and np.allclose(again.probs, dist.probs, rtol=0, atol=1e-15)


def test_table_matches_per_context_rows():
    pols, w, mu, K = _random_problem(5)
    P = np.random.default_rng(0).dirichlet(np.ones(pols.shape[0]))
    table = mixed_action_table(P, pols, mu, K)
    for x in range(pols.shape[1]):
        assert np.allclose(table[x], naive_action_dist(P, pols, x, mu, K))
