"""Deterministic, splittable random streams.

Every stochastic routine in the package derives its generator from
``(master seed, stream id)`` so that results are reproducible bit-for-bit
regardless of call order, thread count, or which other generators ran
first. Stream ids are short tuples of small integers; composite
generators extend the tuple when they fan out (e.g. one sub-stream per
fluctuator).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def stream(seed: int, ids: tuple[int, ...] = ()) -> np.random.Generator:
    """Return the PCG64 generator for stream ``ids`` under ``seed``."""
    if seed is None:
        raise InvalidInputError("a seed is required for reproducible generation")
    try:
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in ids))
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad seed or stream id: {exc}") from exc
    return np.random.Generator(np.random.PCG64(ss))
