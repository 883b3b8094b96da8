"""Deterministic hierarchical RNG streams.

Every random entity in a simulation (channel, user coin/selection, user
transmissions, baseline user) owns a numpy Generator addressed by
(master seed, run index, role tag, entity index).  Streams are independent
of each other and of the order in which they are created, which keeps runs
reproducible under any degree of run-level parallelism.
"""

from __future__ import annotations

import numpy as np

# role tags keep streams for different jobs disjoint
CHANNEL = 1
USER_TX = 2
USER_POLICY = 3
BASELINE = 4


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent Generator for the stream addressed by (master_seed, *path)."""
    if master_seed < 0:
        raise ValueError(f"master seed must be non-negative, got {master_seed}")
    entropy = [int(master_seed)] + [int(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
