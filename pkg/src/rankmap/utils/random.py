"""Seeded random streams.

Every random draw in rankmap comes from a ``numpy.random.Generator`` on the
PCG64 bit generator, seeded through ``SeedSequence``. Child streams are derived
with ``SeedSequence.spawn`` so independent components never share a stream.
"""

import numpy as np


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Create a PCG64 generator from an integer seed or a seed sequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed: int, count: int) -> list[np.random.Generator]:
    """Split one seed into ``count`` independent generators."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [make_rng(child) for child in children]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic integer seed for the child stream addressed by ``keys``."""
    child = np.random.SeedSequence(seed, spawn_key=tuple(keys))
    return int(child.generate_state(1, dtype=np.uint64)[0])
