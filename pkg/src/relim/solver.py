"""Exploration distributions over surviving regressors.

Given the policies of the surviving set F' (a ``(n, num_contexts)`` action
table) and context weights w, we look for a distribution P on F' whose
smoothed action distribution

    P'(a | x) = (1 - mu) * sum_{f : pi_f(x) = a} P(f) + mu / |A(F', x)|     (a in A(F', x))

satisfies ``E_x[1 / P'(pi_f(x) | x)] <= E_x[|A(F', x)|]`` for every f in F'.

The solver maximizes the concave potential

    G(P) = sum_x w_x sum_{a in A(F', x)} log P'(a | x)

over the simplex. At a maximizer every member satisfies the constraint
(``dG/dP(f) = (1 - mu) E_x[1/P'(pi_f(x)|x)]`` is bounded by the support
average, which is at most ``(1 - mu) E_x|A(F', x)|``), so iterating until the
measured violation drops below ``tol`` always terminates. Each iteration takes
a pairwise Frank-Wolfe step (mass moves from the weakest support member to the
member with the largest inverse propensity) followed by a Newton step on the
face spanned by the current support, both with exact line search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputError, InternalError, active_action_counts

DEFAULT_REL_TOL = 1e-6


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap with the constraint still violated."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class ExplorationDist:
    """Distribution ``probs`` over the members listed in ``members`` plus cached P'(a|x)."""

    probs: np.ndarray
    mu: float
    action_dists: np.ndarray
    members: np.ndarray | None = None

    def action_cdf(self, x: int) -> np.ndarray:
        return np.cumsum(self.action_dists[x])


@dataclass
class SolveReport:
    iterations: int
    final_violation: float
    bound: float
    converged: bool
    tol: float = 0.0
    trace: list = field(default_factory=list)


def _check_policies(policies, K: int) -> np.ndarray:
    pol = np.asarray(policies, dtype=np.intp)
    if pol.ndim == 1:
        pol = pol[None, :]
    if pol.ndim != 2 or pol.shape[0] < 1:
        raise InputError("need a non-empty (n, num_contexts) policy table")
    if np.any(pol < 0) or np.any(pol >= K):
        raise InputError("policy actions out of range")
    return pol


def mixed_action_table(P, policies, mu: float, K: int) -> np.ndarray:
    """All rows ``P'(. | x)`` as a ``(num_contexts, K)`` table."""
    pol = _check_policies(policies, K)
    P = np.asarray(P, dtype=float)
    n, X = pol.shape
    if P.shape != (n,):
        raise InputError("P must have one entry per policy")
    if not 0.0 <= mu <= 0.5:
        raise InputError("mu must lie in [0, 1/2]")
    mass = np.zeros((X, K))
    present = np.zeros((X, K), dtype=bool)
    cols = np.broadcast_to(np.arange(X), pol.shape)
    np.add.at(mass, (cols, pol), np.broadcast_to(P[:, None], pol.shape))
    present[cols, pol] = True
    counts = present.sum(axis=1)
    return (1.0 - mu) * mass + present * (mu / counts)[:, None]


def mixed_action_dist(P, policies, x: int, mu: float, K: int) -> np.ndarray:
    """Row ``P'(. | x)``: with prob 1 - mu follow pi_f for f ~ P, else uniform on A(F', x)."""
    pol = _check_policies(policies, K)
    if not 0 <= x < pol.shape[1]:
        raise InputError(f"context index {x} out of range")
    return mixed_action_table(P, pol[:, x : x + 1], mu, K)[0]


def inverse_propensities(action_table: np.ndarray, policies, weights) -> np.ndarray:
    """``E_x[1 / P'(pi_f(x) | x)]`` for every policy row."""
    pol = np.asarray(policies, dtype=np.intp)
    w = np.asarray(weights, dtype=float)
    X = pol.shape[1]
    props = action_table[np.arange(X)[None, :], pol]
    support = w > 0
    if np.any(props[:, support] <= 0):
        raise InternalError("zero propensity for a surviving policy's action on a context with positive weight")
    inv = np.zeros_like(props)
    inv[:, support] = 1.0 / props[:, support]
    return inv @ w


def constraint_bound(policies, weights, K: int) -> float:
    """Right-hand side ``E_x[|A(F', x)|]``."""
    return float(np.asarray(weights, dtype=float) @ active_action_counts(policies, K))


def max_violation(P, policies, weights, mu: float, K: int) -> tuple[float, int]:
    """Largest ``E_x[1/P'(pi_f(x)|x)] - E_x|A(F', x)|`` over f in F', with its witness index."""
    pol = _check_policies(policies, K)
    w = np.asarray(weights, dtype=float)
    if w.shape != (pol.shape[1],):
        raise InputError("weights must have one entry per context")
    table = mixed_action_table(P, pol, mu, K)
    g = inverse_propensities(table, pol, w)
    i = int(np.argmax(g))
    return float(g[i] - constraint_bound(pol, w, K)), i


def default_max_iters(n: int) -> int:
    return max(1, math.ceil(50 * n * math.log(n + 1)))


class _Problem:
    """Pre-indexed arrays for one (F', w, mu) instance."""

    def __init__(self, pol: np.ndarray, w: np.ndarray, mu: float, K: int):
        self.pol, self.w, self.mu, self.K = pol, w, mu, K
        n, X = pol.shape
        self.flat = np.arange(X)[None, :] * K + pol
        onehot = np.zeros((n, X * K))
        np.put_along_axis(onehot, self.flat, 1.0, axis=1)
        self.onehot = onehot
        present = onehot.sum(axis=0).reshape(X, K) > 0
        counts = present.sum(axis=1)
        self.floor = (present * (mu / counts)[:, None]).ravel()
        self.bound = float(w @ counts)
        self.support_ctx = w > 0

    def table(self, P: np.ndarray) -> np.ndarray:
        return (1.0 - self.mu) * (P @ self.onehot) + self.floor

    def gradient(self, table: np.ndarray) -> np.ndarray:
        props = table[self.flat]
        if np.any(props[:, self.support_ctx] <= 0):
            raise InternalError("zero propensity on a context with positive weight")
        with np.errstate(divide="ignore"):
            inv = np.where(self.support_ctx, 1.0 / props, 0.0)
        return inv @ self.w

    def aggregate_step(self, table: np.ndarray, delta: np.ndarray, amax: float) -> float:
        """Step in [0, amax] maximizing G along a direction whose action-mass change is ``delta``.

        ``delta`` is the ``(num_contexts * K)`` change of sum_{f: pi_f(x)=a} P(f) per unit step.
        """
        keep = (delta != 0) & np.repeat(self.support_ctx, self.K)
        if not np.any(keep):
            return 0.0
        c = 1.0 - self.mu
        w = np.repeat(self.w, self.K)[keep]
        base = table[keep]
        dz = c * delta[keep]

        def slope(s):
            return w @ (dz / (base + s * dz))

        def curvature(s):
            return -(w @ (dz / (base + s * dz)) ** 2)

        if slope(amax) >= 0:
            return amax
        lo, hi, s = 0.0, amax, 0.0
        for _ in range(100):
            d = slope(s)
            if d > 0:
                lo = s
            else:
                hi = s
            step = s - d / curvature(s)
            if not lo < step < hi:
                step = 0.5 * (lo + hi)
            if abs(step - s) <= 1e-16 * max(1.0, s) or hi - lo <= 1e-17 * max(1.0, hi):
                return step
            s = step
        return s

    def newton_direction(self, P: np.ndarray, table: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Equality-constrained Newton direction for G on the face spanned by the support of P."""
        on = np.flatnonzero(P > 0)
        d = np.zeros_like(P)
        if on.size < 2:
            return d
        c = 1.0 - self.mu
        A = self.onehot[on]
        with np.errstate(divide="ignore", invalid="ignore"):
            curv = np.where(table > 0, np.repeat(self.w, self.K) / table**2, 0.0)
        Q = (c * c) * (A * curv) @ A.T
        m = on.size
        kkt = np.zeros((m + 1, m + 1))
        kkt[:m, :m] = Q
        kkt[:m, m] = 1.0
        kkt[m, :m] = 1.0
        rhs = np.append(c * g[on], 0.0)
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        d[on] = sol[:m]
        d[on] -= d[on].mean()
        return d


def solve_exploration_dist(
    policies,
    weights,
    mu: float,
    K: int,
    tol: float | None = None,
    max_iters: int | None = None,
    warm_start=None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> tuple[ExplorationDist, SolveReport]:
    """Find P over the rows of ``policies`` meeting the inverse-propensity constraint.

    Parameters
    ----------
    policies : array of shape (n, num_contexts)
        ``pi_f(x)`` for every surviving regressor f.
    weights : array of shape (num_contexts,)
        Context distribution the expectations are taken under.
    mu : float
        Smoothing mass, in (0, 1/2].
    K : int
        Number of actions.
    tol : float, optional
        Absolute violation tolerance. Defaults to ``rel_tol * E_x|A(F', x)|``.
    max_iters : int, optional
        Defaults to ``50 n ln(n + 1)``.
    warm_start : array of shape (n,), optional
        Starting distribution, e.g. the previous round's P restricted to the
        survivors. Falls back to uniform when it carries no mass.

    Returns
    -------
    (ExplorationDist, SolveReport)

    Raises
    ------
    ConvergenceError
        If the violation is still above ``tol`` after ``max_iters`` steps.
    """
    pol = _check_policies(policies, K)
    w = np.asarray(weights, dtype=float)
    n, X = pol.shape
    if w.shape != (X,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InputError("weights must be a probability vector over contexts")
    if not 0.0 < mu <= 0.5:
        raise InputError("mu must lie in (0, 1/2]")

    prob = _Problem(pol, w, mu, K)
    if tol is None:
        tol = rel_tol * prob.bound
    if tol <= 0:
        raise InputError("tol must be positive")
    if max_iters is None:
        max_iters = default_max_iters(n)

    P = None
    if warm_start is not None:
        P = np.clip(np.asarray(warm_start, dtype=float), 0.0, None)
        P = P / P.sum() if P.shape == (n,) and P.sum() > 0 else None
    if P is None:
        P = np.full(n, 1.0 / n)

    table = prob.table(P)
    g = prob.gradient(table)
    violation = float(g.max() - prob.bound)
    best_P, best_violation = P.copy(), violation
    trace = [best_violation]
    it = 0
    while best_violation > tol and it < max_iters:
        it += 1
        plus = int(np.argmax(g))
        on = np.flatnonzero(P > 0)
        minus = int(on[np.argmin(g[on])])
        if g[plus] > g[minus]:
            step = prob.aggregate_step(table, prob.onehot[plus] - prob.onehot[minus], P[minus])
            if step >= P[minus]:
                step = P[minus]
                P[minus] = 0.0
            else:
                P[minus] -= step
            P[plus] += step
            table = prob.table(P)
            g = prob.gradient(table)

        d = prob.newton_direction(P, table, g)
        shrink = d < 0
        if np.any(shrink):
            ratios = P[shrink] / -d[shrink]
            amax = float(ratios.min())
            step = prob.aggregate_step(table, d @ prob.onehot, amax)
            if step > 0:
                P = P + step * d
                if step >= amax:
                    P[np.flatnonzero(shrink)[ratios <= step]] = 0.0
                P = np.clip(P, 0.0, None)
                P /= P.sum()
                table = prob.table(P)
                g = prob.gradient(table)

        violation = float(g.max() - prob.bound)
        if violation < best_violation:
            best_P, best_violation = P.copy(), violation
        if it % 10 == 0:
            trace.append(best_violation)

    report = SolveReport(
        iterations=it,
        final_violation=best_violation,
        bound=prob.bound,
        converged=best_violation <= tol,
        tol=tol,
        trace=trace,
    )
    if not report.converged:
        raise ConvergenceError(
            f"violation {best_violation:.3e} > tol {tol:.3e} after {it} iterations", report
        )
    best_P /= best_P.sum()
    dist = ExplorationDist(probs=best_P, mu=mu, action_dists=prob.table(best_P).reshape(X, K))
    return dist, report
