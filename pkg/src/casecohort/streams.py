"""Derivation of independent random streams from a master seed.

Every random stream in the package is addressed by a path of integers
below a master seed, e.g. ``(simulation, attempt, purpose)`` or
``(replicate, attempt)``. Streams are built from
:class:`numpy.random.SeedSequence` spawn keys, so the stream for a given
path does not depend on how many other streams were created before it or
on which worker creates it.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]


def derive(seed: SeedLike, *path: int) -> np.random.SeedSequence:
    """Return the seed sequence addressed by ``path`` below ``seed``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy,
            spawn_key=tuple(seed.spawn_key) + tuple(int(k) for k in path),
            pool_size=seed.pool_size,
        )
    if isinstance(seed, (int, np.integer)) and not isinstance(seed, bool):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        return np.random.SeedSequence(
            entropy=int(seed), spawn_key=tuple(int(k) for k in path)
        )
    raise TypeError(f"expected an int or SeedSequence, got {type(seed).__name__}")


def generator(seed: SeedLike, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive(seed, *path)))
