"""Tabular contextual-bandit domain types and the pure functions shared by all learners.

Contexts and actions are dense integer indices. A regressor is a dense
``(num_contexts, K)`` table of predicted mean rewards in ``[0, 1]`` and its
induced policy picks the lowest-index maximizer in every context.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Invalid arguments or malformed input data."""


class CapacityError(InputError):
    """Requested object exceeds the configured size cap."""


class ConstructionError(RuntimeError):
    """A generated object failed its post-construction audit."""


class InternalError(RuntimeError):
    """An invariant that should hold by construction was violated."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ActionSpace:
    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise InputError(f"K must be an integer >= 2, got {self.K}")


@dataclass(frozen=True, eq=False)
class ContextSpace:
    """Finite context set with its known sampling distribution D(x)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise InputError("context weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InputError("context weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, num_contexts: int) -> "ContextSpace":
        if num_contexts < 1:
            raise InputError("num_contexts must be >= 1")
        return cls(np.full(num_contexts, 1.0 / num_contexts))

    @property
    def num_contexts(self) -> int:
        return self.weights.size

    @cached_property
    def cdf(self) -> np.ndarray:
        return _frozen(np.cumsum(self.weights))


@dataclass(frozen=True, eq=False)
class Regressor:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError("regressor table must be 2-D (num_contexts, K)")
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise InputError("regressor entries must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(v))


class RegressorClass:
    """An ordered, immutable collection of N regressor tables.

    Stored as one ``(N, num_contexts, K)`` array; ``argmax_policy[i, x]`` is the
    action chosen by member ``i`` in context ``x``.
    """

    def __init__(self, tables):
        if isinstance(tables, np.ndarray):
            t = np.array(tables, dtype=float)
        else:
            t = np.array([getattr(m, "values", m) for m in tables], dtype=float)
        if t.ndim != 3 or t.shape[0] < 1:
            raise InputError("need at least one regressor table of shape (num_contexts, K)")
        if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
            raise InputError("regressor entries must lie in [0, 1]")
        self.tables = _frozen(t)
        self.argmax_policy = _frozen(np.argmax(t, axis=2))

    def __len__(self) -> int:
        return self.tables.shape[0]

    def __getitem__(self, i: int) -> Regressor:
        return Regressor(self.tables[i])

    @property
    def members(self) -> list[Regressor]:
        return [self[i] for i in range(len(self))]

    @property
    def num_contexts(self) -> int:
        return self.tables.shape[1]

    @property
    def K(self) -> int:
        return self.tables.shape[2]

    @cached_property
    def by_context_action(self) -> np.ndarray:
        """Tables transposed to ``(num_contexts, K, N)`` for fast per-round loss updates."""
        return _frozen(np.ascontiguousarray(self.tables.transpose(1, 2, 0)))


@dataclass(frozen=True)
class RoundLog:
    t: int
    context: int
    action: int
    reward: float
    instant_regret: float

    def __post_init__(self):
        if not 0.0 <= self.reward <= 1.0:
            raise InputError(f"reward {self.reward} outside [0, 1]")


def _table(f) -> np.ndarray:
    return f.values if isinstance(f, Regressor) else np.asarray(f, dtype=float)


def argmax_action(f, x: int) -> int:
    """Action ``pi_f(x)``; ties go to the lowest action index."""
    table = _table(f)
    if not 0 <= x < table.shape[0]:
        raise InputError(f"context index {x} out of range [0, {table.shape[0]})")
    return int(np.argmax(table[x]))


def active_actions(regressors: Iterable, x: int) -> set[int]:
    """The set ``A(F', x)`` of actions chosen in context ``x`` by some member of ``F'``."""
    if isinstance(regressors, RegressorClass):
        if not 0 <= x < regressors.num_contexts:
            raise InputError(f"context index {x} out of range")
        return set(int(a) for a in np.unique(regressors.argmax_policy[:, x]))
    acts = {argmax_action(f, x) for f in regressors}
    if not acts:
        raise InputError("active_actions needs a non-empty regressor subset")
    return acts


def active_action_counts(policies: np.ndarray, K: int) -> np.ndarray:
    """``|A(F', x)|`` for every context, given the ``(n, num_contexts)`` policy table of F'."""
    policies = np.asarray(policies)
    present = np.zeros((policies.shape[1], K), dtype=bool)
    present[np.arange(policies.shape[1])[None, :], policies] = True
    return present.sum(axis=1)


def squared_loss_increment(tables_xa: np.ndarray, reward: float) -> np.ndarray:
    """Per-regressor squared prediction error for one observed (x, a, r).

    Every learner accumulates losses through this function so their loss
    accounting is bit-identical on the same stream.
    """
    diff = tables_xa - reward
    return diff * diff


def avg_squared_loss(history: Sequence[RoundLog], f) -> float:
    """Mean of ``(f(x_t, a_t) - r_t)^2`` over the logged rounds."""
    if len(history) == 0:
        raise InputError("avg_squared_loss needs a non-empty history")
    table = _table(f)
    errs = [(table[h.context, h.action] - h.reward) ** 2 for h in history]
    return float(np.mean(errs))


def expected_instant_regret(instance, f) -> float:
    """Exact ``E_{x~D}[f*(x, pi_{f*}(x)) - f*(x, pi_f(x))]`` from the tables."""
    means = instance.means
    table = _table(f)
    xs = np.arange(means.shape[0])
    gaps = means[xs, instance.optimal_policy] - means[xs, np.argmax(table, axis=1)]
    return float(instance.contexts.weights @ gaps)
