"""Monte Carlo checks of the squared-loss identities behind the elimination rule.

For a regressor f and the truth f*, with x ~ D, a ~ p(.|x) and r ~ Bernoulli(f*(x, .)),

    Y = (f(x, a) - r(a))^2 - (f*(x, a) - r(a))^2

has mean ``E[(f(x,a) - f*(x,a))^2]`` and variance at most ``4 E[Y]``. If p puts
enough mass on the actions of f and f* (``E_x[1/p(pi(x)|x)] <= K`` for both),
the squared expected regret of pi_f is at most ``2K E[Y]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..core import InputError
from ..instances import Instance, gen_random_tabular
from ..learner import mu_value
from ..solver import ExplorationDist, solve_exploration_dist
from .streams import stream

MIN_SAMPLES = 1000
AUDIT_REL_TOL = 1e-6


@dataclass
class DiagReport:
    mean_Y: float
    se_Y: float
    mean_sq_gap: float
    se_sq_gap: float
    var_Y: float
    regret_sq: float
    transfer_rhs: float
    num_samples: int
    identity_flag: bool = False
    variance_flag: bool = False
    transfer_flag: bool = False


def _action_table(instance: Instance, dist) -> np.ndarray:
    table = dist.action_dists if isinstance(dist, ExplorationDist) else np.asarray(dist, dtype=float)
    if table.shape != (instance.num_contexts, instance.K):
        raise InputError("action distribution must be a (num_contexts, K) table")
    if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-9):
        raise InputError("every action-distribution row must be a probability vector")
    return table


def exact_regret_sq(instance: Instance, f_index: int) -> float:
    """``(E_x[f*(x, pi_f*(x)) - f*(x, pi_f(x))])^2`` from the tables."""
    xs = np.arange(instance.num_contexts)
    pol = instance.regressors.argmax_policy[f_index]
    gap = instance.optimal_values - instance.means[xs, pol]
    return float(instance.contexts.weights @ gap) ** 2


def _sample(instance: Instance, f_index: int, table: np.ndarray, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    cdf = instance.contexts.cdf
    xs = np.minimum(np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right"), cdf.size - 1)
    row_cdf = np.cumsum(table, axis=1)[xs]
    u = rng.random(n) * row_cdf[:, -1]
    acts = np.minimum((row_cdf <= u[:, None]).sum(axis=1), instance.K - 1)
    fstar = instance.means[xs, acts]
    f = instance.regressors.tables[f_index][xs, acts]
    r = (rng.random(n) < fstar).astype(float)
    Y = (f - r) ** 2 - (fstar - r) ** 2
    return Y, (f - fstar) ** 2


def _report(instance: Instance, f_index: int, Y: np.ndarray, gap: np.ndarray, transfer: bool = False) -> DiagReport:
    n = Y.size
    se_Y = float(Y.std(ddof=1) / math.sqrt(n))
    se_gap = float(gap.std(ddof=1) / math.sqrt(n))
    mean_Y, mean_gap, var_Y = float(Y.mean()), float(gap.mean()), float(Y.var(ddof=1))
    two_k = 2 * instance.K
    rep = DiagReport(
        mean_Y=mean_Y,
        se_Y=se_Y,
        mean_sq_gap=mean_gap,
        se_sq_gap=se_gap,
        var_Y=var_Y,
        regret_sq=exact_regret_sq(instance, f_index),
        transfer_rhs=two_k * mean_Y,
        num_samples=n,
    )
    rep.identity_flag = abs(mean_Y - mean_gap) > 3 * math.hypot(se_Y, se_gap)
    rep.variance_flag = var_Y > 4 * mean_Y + 3 * se_Y
    if transfer:
        rep.transfer_flag = rep.regret_sq > rep.transfer_rhs + 3 * se_Y * two_k
    return rep


def _check(instance: Instance, f_index: int, num_samples: int) -> None:
    if not 0 <= f_index < instance.N:
        raise InputError(f"f_index {f_index} out of range")
    if num_samples < MIN_SAMPLES:
        raise InputError(f"need at least {MIN_SAMPLES} samples for a standard-error estimate")


def diag_lemma3(instance: Instance, f_index: int, action_dist, num_samples: int, rng) -> DiagReport:
    """Estimate E[Y], E[(f - f*)^2] and Var[Y] and flag departures beyond 3 standard errors.

    ``action_dist`` is any ``(num_contexts, K)`` table of conditional action
    distributions (or an :class:`ExplorationDist`); actions are drawn
    independently of the rewards given the context.
    """
    _check(instance, f_index, num_samples)
    table = _action_table(instance, action_dist)
    Y, gap = _sample(instance, f_index, table, num_samples, rng)
    return _report(instance, f_index, Y, gap)


def audit_transfer_precondition(instance: Instance, f_index: int, table: np.ndarray) -> None:
    """Require ``E_x[1/p(pi(x)|x)] <= K`` for pi = pi_f and pi = pi_f*."""
    w = instance.contexts.weights
    xs = np.arange(instance.num_contexts)
    limit = instance.K * (1 + AUDIT_REL_TOL)
    for name, idx in (("f", f_index), ("f*", instance.truth_index)):
        props = table[xs, instance.regressors.argmax_policy[idx]]
        live = w > 0
        if np.any(props[live] <= 0):
            raise InputError(f"exploration distribution never plays pi_{name}(x) on some context")
        value = float(w[live] @ (1.0 / props[live]))
        if value > limit:
            raise InputError(f"E_x[1/p(pi_{name}(x)|x)] = {value:.6g} exceeds K = {instance.K}")


def diag_lemma4(instance: Instance, f_index: int, exploration_dist, num_samples: int, rng) -> DiagReport:
    """Compare the exact squared regret of pi_f with the Monte Carlo bound ``2K E[Y]``."""
    _check(instance, f_index, num_samples)
    table = _action_table(instance, exploration_dist)
    audit_transfer_precondition(instance, f_index, table)
    Y, gap = _sample(instance, f_index, table, num_samples, rng)
    return _report(instance, f_index, Y, gap, transfer=True)


def random_triple(master_seed: int, index: int, lemma: str, instance_spec=None):
    """A random (instance, f_index, action table) for the given check.

    lemma3 pairs a random tabular instance with Dirichlet action rows; lemma4
    uses the solved exploration distribution over the whole class, which
    satisfies the transfer precondition.
    """
    rng = stream(master_seed, index, "diag")
    seed = stream(master_seed, index, "instance")
    if instance_spec is not None:
        instance = instance_spec(seed)
    else:
        X, K, N = int(rng.integers(1, 11)), int(rng.integers(2, 7)), int(rng.integers(2, 21))
        instance = gen_random_tabular(seed, X, K, N)
    others = [i for i in range(instance.N) if i != instance.truth_index]
    f_index = int(rng.choice(others))
    if lemma == "lemma3":
        table = rng.dirichlet(np.ones(instance.K), size=instance.num_contexts)
    elif lemma == "lemma4":
        T = int(rng.integers(100, 10001))
        dist, _ = solve_exploration_dist(
            instance.regressors.argmax_policy, instance.contexts.weights, mu_value(instance.K, T), instance.K
        )
        table = dist.action_dists
    else:
        raise InputError(f"unknown diagnostic {lemma!r}")
    return instance, f_index, table, rng


def run_diagnostics(
    lemma: str, triples: int, num_samples: int, master_seed: int = 0, instance_spec=None, out_path=None
) -> dict:
    """Run ``triples`` random checks; optionally write the JSON report to ``out_path``."""
    check = {"lemma3": diag_lemma3, "lemma4": diag_lemma4}.get(lemma)
    if check is None:
        raise InputError(f"unknown diagnostic {lemma!r}")
    reports = []
    for i in range(triples):
        instance, f_index, table, rng = random_triple(master_seed, i, lemma, instance_spec)
        rep = check(instance, f_index, table, num_samples, rng)
        reports.append({"triple": i, "f_index": f_index, **asdict(rep)})
    summary = {
        "lemma": lemma,
        "triples": triples,
        "num_samples": num_samples,
        "identity_flags": sum(r["identity_flag"] for r in reports),
        "variance_flags": sum(r["variance_flag"] for r in reports),
        "transfer_flags": sum(r["transfer_flag"] for r in reports),
        "reports": reports,
    }
    if out_path is not None:
        Path(out_path).write_text(json.dumps(summary, indent=2) + "\n")
    return summary
