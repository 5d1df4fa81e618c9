"""TOML experiment configuration. Unknown keys are rejected so typos cannot pass silently.

Example::

    master_seed = 0
    T = 10000
    delta = 0.1
    seeds = 50                  # a count (indices 0..n-1) or an explicit list

    [instance]
    generator = "random_tabular"  # random_tabular | lower_bound | nontrivial | file
    num_contexts = 10
    K = 5
    N = 50

    [learner]
    kind = "relim"              # relim | uniform | epsilon_greedy | follow_the_leader
    dist_mode = "known"         # known | empirical
    cadence = "every"           # every | doubling

    [solver]
    tol = 1e-6                  # relative to E_x|A(F', x)|
    max_iters = 5000

    [output]
    dir = "runs/example"

    [diag]                      # only read by `relim diag`
    lemma = "lemma3"            # lemma3 | lemma4
    triples = 100
    num_samples = 100000
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from ..core import InputError
from ..instances import Instance, gen_lower_bound, gen_random_tabular, load_instance, random_nontrivial

TOP_KEYS = {"master_seed", "T", "delta", "seeds", "instance", "learner", "solver", "output", "diag"}
GENERATOR_KEYS = {
    "random_tabular": {"num_contexts", "K", "N"},
    "lower_bound": {"N_target", "K", "epsilon_scale", "T"},
    "nontrivial": {"num_contexts", "K", "N"},
    "file": {"path"},
}
LEARNER_KEYS = {"kind", "dist_mode", "cadence", "epsilon_c"}
LEARNER_KINDS = {"relim", "uniform", "epsilon_greedy", "follow_the_leader"}
SOLVER_KEYS = {"tol", "max_iters"}
OUTPUT_KEYS = {"dir"}
DIAG_KEYS = {"lemma", "triples", "num_samples"}


def _reject_unknown(section: str, got: dict, allowed: set) -> None:
    extra = set(got) - allowed
    if extra:
        raise InputError(f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")


@dataclass(frozen=True)
class ExperimentConfig:
    instance: dict
    learner: dict = field(default_factory=lambda: {"kind": "relim"})
    T: int = 1000
    delta: float = 0.1
    seeds: tuple = (0,)
    master_seed: int = 0
    solver: dict = field(default_factory=dict)
    output_dir: str | None = None
    diag: dict | None = None
    base_dir: str = "."

    def __post_init__(self):
        if not self.seeds:
            raise InputError("seeds must be non-empty")
        if any(int(s) != s or s < 0 for s in self.seeds):
            raise InputError("seed indices must be non-negative integers")
        if int(self.T) != self.T or self.T < 1:
            raise InputError("T must be a positive integer")
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise InputError("master_seed must be a non-negative integer")

        inst = dict(self.instance)
        gen = inst.pop("generator", None)
        if gen not in GENERATOR_KEYS:
            raise InputError(f"[instance] generator must be one of {sorted(GENERATOR_KEYS)}, got {gen!r}")
        _reject_unknown("instance", inst, GENERATOR_KEYS[gen])
        required = GENERATOR_KEYS[gen] - {"epsilon_scale", "T"}
        missing = required - set(inst)
        if missing:
            raise InputError(f"[instance] {gen} needs: {', '.join(sorted(missing))}")

        _reject_unknown("learner", self.learner, LEARNER_KEYS)
        if self.learner.get("kind", "relim") not in LEARNER_KINDS:
            raise InputError(f"[learner] kind must be one of {sorted(LEARNER_KINDS)}")
        _reject_unknown("solver", self.solver, SOLVER_KEYS)
        if self.diag is not None:
            _reject_unknown("diag", self.diag, DIAG_KEYS)
            if self.diag.get("lemma", "lemma3") not in ("lemma3", "lemma4"):
                raise InputError("[diag] lemma must be 'lemma3' or 'lemma4'")

    def with_seeds(self, n: int) -> "ExperimentConfig":
        if n < 1:
            raise InputError("--seeds must be >= 1")
        return replace(self, seeds=tuple(range(n)))

    def make_instance(self, seed) -> Instance:
        """Build this config's instance; ``seed`` feeds the generator's random stream."""
        spec = dict(self.instance)
        gen = spec.pop("generator")
        if gen == "random_tabular":
            return gen_random_tabular(seed, spec["num_contexts"], spec["K"], spec["N"])
        if gen == "nontrivial":
            return random_nontrivial(seed, spec["num_contexts"], spec["K"], spec["N"])
        if gen == "lower_bound":
            return gen_lower_bound(
                seed, spec["N_target"], spec["K"], spec.get("T", self.T), spec.get("epsilon_scale", 0.25)
            )
        path = Path(spec["path"])
        if not path.is_absolute():
            path = Path(self.base_dir) / path
        return load_instance(path)


def config_from_dict(data: dict, base_dir: str = ".") -> ExperimentConfig:
    _reject_unknown("top level", data, TOP_KEYS)
    if "instance" not in data:
        raise InputError("config needs an [instance] section")
    seeds = data.get("seeds", 1)
    if isinstance(seeds, int):
        seeds = tuple(range(seeds))
    elif isinstance(seeds, list):
        seeds = tuple(seeds)
    else:
        raise InputError("seeds must be an integer count or a list of indices")
    output = data.get("output", {})
    _reject_unknown("output", output, OUTPUT_KEYS)
    return ExperimentConfig(
        instance=dict(data["instance"]),
        learner=dict(data.get("learner", {"kind": "relim"})),
        T=data.get("T", 1000),
        delta=data.get("delta", 0.1),
        seeds=seeds,
        master_seed=data.get("master_seed", 0),
        solver=dict(data.get("solver", {})),
        output_dir=output.get("dir"),
        diag=dict(data["diag"]) if "diag" in data else None,
        base_dir=base_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return config_from_dict(data, base_dir=str(path.parent))
