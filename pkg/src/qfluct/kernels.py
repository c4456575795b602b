"""Backend selection for the hot kernels.

Imports the compiled Cython extension when present, otherwise the
pure-Python/numpy fallback. Set ``QFLUCT_PURE_PYTHON=1`` to force the
fallback (useful for benchmarking and for verifying that both backends
produce bit-identical results).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QFLUCT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
HAVE_COMPILED: bool = _impl.BACKEND == "compiled"

telegraph_states = _impl.telegraph_states
