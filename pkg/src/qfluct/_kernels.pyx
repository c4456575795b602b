# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hot kernels.

Mirrors ``qfluct._kernels_py`` exactly: same uniform-variate consumption,
same comparison order, bit-identical output.
"""

import numpy as np

cimport cython
cimport numpy as cnp

BACKEND = "compiled"


def telegraph_states(u, double p_low_high, double p_high_low, int initial):
    """Evolve a two-state Markov chain from pre-drawn uniforms.

    ``out[i]`` is the state after the transition decided by ``u[i]``
    (0 = low, 1 = high), starting from ``initial``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n, dtype=np.uint8)
    cdef double[2] p
    p[0] = p_low_high
    p[1] = p_high_low
    cdef int state = initial
    cdef Py_ssize_t i
    for i in range(n):
        if uu[i] < p[state]:
            state = 1 - state
        out[i] = <cnp.uint8_t> state
    return out
