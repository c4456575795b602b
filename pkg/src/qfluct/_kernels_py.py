"""Pure-Python/numpy implementations of the hot kernels.

These are the import-time fallback when the compiled extension
(``qfluct._kernels``) is unavailable. Both backends consume the same
pre-drawn uniform variates and perform the same IEEE-754 comparisons in
the same order, so their outputs are bit-identical.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def telegraph_states(u: np.ndarray, p_low_high: float, p_high_low: float, initial: int) -> np.ndarray:
    """Evolve a two-state Markov chain from pre-drawn uniforms.

    ``out[i]`` is the state after the transition decided by ``u[i]``
    (0 = low, 1 = high), starting from ``initial``. The per-step flip
    probabilities are state dependent; when they coincide the chain
    reduces to a parity over independent flips and is fully vectorized.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    n = u.shape[0]
    out = np.empty(n, dtype=np.uint8)
    if p_low_high == p_high_low:
        flips = u < p_low_high
        parity = np.cumsum(flips, dtype=np.int64)
        np.bitwise_and(parity + int(initial), 1, out=out, casting="unsafe")
        return out
    state = int(initial)
    p = (p_low_high, p_high_low)
    for i in range(n):
        if u[i] < p[state]:
            state = 1 - state
        out[i] = state
    return out
