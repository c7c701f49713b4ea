"""Deterministic random streams.

Every stream is a ``numpy.random.Generator`` over the counter-based Philox4x64
bit generator, keyed by ``SeedSequence(seed, spawn_key=(stream_id, *extra))``.
Streams with different keys are statistically independent, so adding draws to
one purpose never shifts the draws of another.
"""

from __future__ import annotations

import numpy as np

GROUND_TRUTH = 0
ARRIVALS = 1
NOISE = 2
VALIDATION = 3
POLICY = 4
BANDIT_NOISE = 5


def stream(seed: int, stream_id: int, *extra: int) -> np.random.Generator:
    """Return the generator for ``(seed, stream_id, *extra)``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id), *map(int, extra)))
    return np.random.Generator(np.random.Philox(ss))
