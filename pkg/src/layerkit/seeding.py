"""Seed derivation helpers.

Every stochastic stage takes an explicit integer seed and derives any
child seeds it needs through SeedSequence spawning, so runs repeat
exactly and stages can be re-run in isolation.
"""

from __future__ import annotations

import numpy as np


def np_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def spawn_seeds(seed: int, n: int) -> list:
    """Derive n independent child seeds from one parent seed."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0] & 0x7FFF_FFFF_FFFF_FFFF) for c in children]
