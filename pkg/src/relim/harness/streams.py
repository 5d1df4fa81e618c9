"""Counter-based random streams keyed by (master_seed, seed_index, component)."""

import numpy as np

from ..core import InputError

COMPONENTS = {"instance": 0, "env": 1, "learner": 2, "diag": 3}


def stream_key(master_seed: int, seed_index: int, component: str) -> np.random.SeedSequence:
    if component not in COMPONENTS:
        raise InputError(f"unknown stream component {component!r}")
    if master_seed < 0 or seed_index < 0:
        raise InputError("seeds must be non-negative integers")
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(seed_index, COMPONENTS[component]))


def stream(master_seed: int, seed_index: int, component: str) -> np.random.Generator:
    """Independent Philox generator; the same triple always yields the same stream."""
    return np.random.Generator(np.random.Philox(stream_key(master_seed, seed_index, component)))
