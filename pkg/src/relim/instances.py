"""Realizable bandit instances: generators, round sampling and a plain-text file format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import (
    ActionSpace,
    CapacityError,
    ConstructionError,
    ContextSpace,
    InputError,
    RegressorClass,
)

MAX_LOWER_BOUND_CLASS = 10**6
NONTRIVIAL_GAP = 1.0 / 20
NONTRIVIAL_MARGIN = 0.01
FILE_MAGIC = "relim-instance 1"


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete simulated world: D(x), the class F and the index of f* in F.

    The truth member doubles as the reward-mean table, so realizability holds
    by construction.
    """

    contexts: ContextSpace
    actions: ActionSpace
    regressors: RegressorClass
    truth_index: int
    reward_kind: str = "bernoulli"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reward_kind != "bernoulli":
            raise InputError(f"unsupported reward_kind {self.reward_kind!r}")
        if not 0 <= self.truth_index < len(self.regressors):
            raise InputError("truth_index out of range")
        if self.regressors.K != self.actions.K:
            raise InputError("regressor tables disagree with the action count")
        if self.regressors.num_contexts != self.contexts.num_contexts:
            raise InputError("regressor tables disagree with the context count")

    @property
    def K(self) -> int:
        return self.actions.K

    @property
    def N(self) -> int:
        return len(self.regressors)

    @property
    def num_contexts(self) -> int:
        return self.contexts.num_contexts

    @property
    def means(self) -> np.ndarray:
        return self.regressors.tables[self.truth_index]

    @property
    def optimal_policy(self) -> np.ndarray:
        return self.regressors.argmax_policy[self.truth_index]

    @cached_property
    def optimal_values(self) -> np.ndarray:
        return self.means[np.arange(self.num_contexts), self.optimal_policy]

    def instant_regret(self, x: int, a: int) -> float:
        return float(self.optimal_values[x] - self.means[x, a])


def audit_realizability(instance: Instance) -> None:
    """Raise ConstructionError unless the reward means are exactly the truth member."""
    truth = instance.regressors.tables[instance.truth_index]
    if truth is not instance.means and not np.array_equal(truth, instance.means):
        raise ConstructionError("reward means differ from the truth regressor")
    if np.any(truth < 0) or np.any(truth > 1):
        raise ConstructionError("reward means outside [0, 1]")


@dataclass(frozen=True)
class LowerBoundParams:
    N_target: int
    K: int
    T: int
    epsilon: float
    M: int


def lower_bound_params(N_target: int, K: int, T: int, epsilon_scale: float = 0.25) -> LowerBoundParams:
    if K < 2:
        raise InputError("K must be >= 2")
    if N_target < K:
        raise InputError("N_target must be >= K so that at least one context exists")
    if T < 1 or math.log(N_target) / math.log(K) > T:
        raise InputError("need ln(N_target)/ln(K) <= T")
    # largest M with K**M <= N_target, in exact integer arithmetic
    M = 0
    while K ** (M + 1) <= N_target:
        M += 1
    if K**M > MAX_LOWER_BOUND_CLASS:
        raise CapacityError(f"K**M = {K**M} exceeds the cap of {MAX_LOWER_BOUND_CLASS} regressors")
    epsilon = min(0.5, epsilon_scale * math.sqrt(K * M / T))
    return LowerBoundParams(N_target=N_target, K=K, T=T, epsilon=epsilon, M=M)


def gen_random_tabular(seed, num_contexts: int, K: int, N: int) -> Instance:
    """Independent uniform tables, uniform D(x), truth drawn uniformly from the N members."""
    if N < 2 or K < 2 or num_contexts < 1:
        raise InputError("need N >= 2, K >= 2 and num_contexts >= 1")
    rng = np.random.default_rng(seed)
    tables = rng.random((N, num_contexts, K))
    truth = int(rng.integers(N))
    return Instance(
        contexts=ContextSpace.uniform(num_contexts),
        actions=ActionSpace(K),
        regressors=RegressorClass(tables),
        truth_index=truth,
        meta={"generator": "random_tabular"},
    )


def decode_mapping(index: int, K: int, M: int) -> np.ndarray:
    """Context-to-action mapping g encoded by ``index`` (digit x of index in base K is g(x))."""
    return (index // K ** np.arange(M)) % K


def gen_lower_bound(seed, N_target: int, K: int, T: int, epsilon_scale: float = 0.25) -> Instance:
    """All K**M mappings g as regressors f_g = 1/2 + eps on g(x), 1/2 elsewhere."""
    params = lower_bound_params(N_target, K, T, epsilon_scale)
    M, n = params.M, K**params.M
    mappings = decode_mapping(np.arange(n)[:, None], K, M)
    tables = np.full((n, M, K), 0.5)
    tables[np.arange(n)[:, None], np.arange(M)[None, :], mappings] += params.epsilon
    rng = np.random.default_rng(seed)
    truth = int(rng.integers(n))
    return Instance(
        contexts=ContextSpace.uniform(M),
        actions=ActionSpace(K),
        regressors=RegressorClass(tables),
        truth_index=truth,
        meta={"generator": "lower_bound", "epsilon": params.epsilon, "M": M},
    )


def _optimal_with_margin(base: np.ndarray, margin: float) -> np.ndarray:
    top2 = np.sort(base, axis=1)[:, -2:]
    if np.any(top2[:, 1] - top2[:, 0] < margin):
        raise InputError(f"base means need a unique optimal action per context with margin >= {margin}")
    return np.argmax(base, axis=1)


def nontrivial_regressor(base: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """Badly-predicting table whose argmax policy is ``policy``."""
    xs = np.arange(base.shape[0])
    f = np.where(base > 0.25, 0.0, 0.5)
    chosen = base[xs, policy]
    f[xs, policy] = np.where(chosen > 0.75, 0.51, 1.0)
    return f


def gen_nontrivial(seed, base, policies) -> Instance:
    """Regressor class realizing ``policies`` where every wrong member mispredicts everywhere.

    The truth member is ``base`` itself; every other policy gets the table from
    :func:`nontrivial_regressor`. Member order is shuffled by ``seed``.
    """
    base = np.array(base, dtype=float)
    if base.ndim != 2 or np.any(base < 0) or np.any(base > 1):
        raise InputError("base must be a (num_contexts, K) table of means in [0, 1]")
    num_contexts, K = base.shape
    pols = np.array([np.asarray(p, dtype=int) for p in policies])
    if pols.ndim != 2 or pols.shape[1] != num_contexts:
        raise InputError("each policy must assign one action per context")
    if np.any(pols < 0) or np.any(pols >= K):
        raise InputError("policy actions out of range")
    if len({tuple(p) for p in pols}) != len(pols):
        raise InputError("policies must be distinct")
    optimal = _optimal_with_margin(base, NONTRIVIAL_MARGIN)
    hits = np.flatnonzero(np.all(pols == optimal, axis=1))
    if hits.size == 0:
        raise InputError("policy set must contain the optimal policy of base")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pols))
    pols = pols[order]
    truth = int(np.flatnonzero(order == hits[0])[0])
    tables = np.array([base if i == truth else nontrivial_regressor(base, p) for i, p in enumerate(pols)])
    regs = RegressorClass(tables)

    if not np.array_equal(regs.argmax_policy, pols):
        raise ConstructionError("constructed regressor does not induce its policy")
    others = np.delete(tables, truth, axis=0)
    if others.size and np.min((others - base) ** 2) < NONTRIVIAL_GAP:
        raise ConstructionError("a wrong member predicts some (x, a) within the 1/20 gap")
    return Instance(
        contexts=ContextSpace.uniform(num_contexts),
        actions=ActionSpace(K),
        regressors=regs,
        truth_index=truth,
        meta={"generator": "nontrivial"},
    )


def random_nontrivial(seed, num_contexts: int, K: int, N: int) -> Instance:
    """Random base means (margin >= 0.01) plus N - 1 distinct random suboptimal policies."""
    if N < 2 or K < 2 or num_contexts < 1:
        raise InputError("need N >= 2, K >= 2 and num_contexts >= 1")
    if K**num_contexts < N:
        raise InputError(f"only {K**num_contexts} distinct policies exist, cannot draw N={N}")
    rng = np.random.default_rng(seed)
    base = rng.random((num_contexts, K))
    for x in range(num_contexts):
        while np.ptp(np.sort(base[x])[-2:]) < NONTRIVIAL_MARGIN:
            base[x] = rng.random(K)
    optimal = np.argmax(base, axis=1)
    seen = {tuple(optimal)}
    policies = [optimal]
    while len(policies) < N:
        p = rng.integers(K, size=num_contexts)
        if tuple(p) not in seen:
            seen.add(tuple(p))
            policies.append(p)
    return gen_nontrivial(rng, base, policies)


def sample_round(instance: Instance, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Draw a context from D(x) and a full Bernoulli reward vector for it."""
    cdf = instance.contexts.cdf
    x = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    x = min(x, cdf.size - 1)
    rewards = (rng.random(instance.K) < instance.means[x]).astype(float)
    return x, rewards


def save_instance(instance: Instance, path) -> Path:
    """Write the instance as whitespace-separated text; floats use shortest round-trip repr."""
    path = Path(path)
    lines = [
        FILE_MAGIC,
        f"num_contexts {instance.num_contexts}",
        f"K {instance.K}",
        f"N {instance.N}",
        f"truth_index {instance.truth_index}",
        f"reward_kind {instance.reward_kind}",
        "weights",
        " ".join(repr(float(w)) for w in instance.contexts.weights),
    ]
    for i, table in enumerate(instance.regressors.tables):
        lines.append(f"regressor {i}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in table)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_instance(path) -> Instance:
    text = Path(path).read_text().splitlines()
    lines = [ln.strip() for ln in text if ln.strip()]
    if not lines or lines[0] != FILE_MAGIC:
        raise InputError(f"{path}: not an instance file (missing {FILE_MAGIC!r} header)")
    header = {}
    pos = 1
    try:
        for key in ("num_contexts", "K", "N", "truth_index", "reward_kind"):
            name, value = lines[pos].split()
            if name != key:
                raise InputError(f"{path}: expected {key!r}, found {name!r}")
            header[key] = value
            pos += 1
        X, K, N = int(header["num_contexts"]), int(header["K"]), int(header["N"])
        if lines[pos] != "weights":
            raise InputError(f"{path}: expected 'weights' section")
        weights = [float(v) for v in lines[pos + 1].split()]
        pos += 2
        tables = np.empty((N, X, K))
        for i in range(N):
            if lines[pos] != f"regressor {i}":
                raise InputError(f"{path}: expected 'regressor {i}'")
            for x in range(X):
                row = [float(v) for v in lines[pos + 1 + x].split()]
                if len(row) != K:
                    raise InputError(f"{path}: regressor {i} row {x} has {len(row)} entries, expected {K}")
                tables[i, x] = row
            pos += 1 + X
    except (IndexError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: malformed instance file ({exc})") from exc
    if pos != len(lines):
        raise InputError(f"{path}: trailing content after regressor tables")
    if len(weights) != X:
        raise InputError(f"{path}: expected {X} context weights")
    return Instance(
        contexts=ContextSpace(np.array(weights)),
        actions=ActionSpace(K),
        regressors=RegressorClass(tables),
        truth_index=int(header["truth_index"]),
        reward_kind=header["reward_kind"],
    )
