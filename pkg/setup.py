"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a pure-Python/numpy
fallback is selected at import time), so any failure to cythonize or compile
downgrades to a source-only install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/qfluct/_kernels.pyx"],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    print(f"qfluct: skipping compiled kernels ({exc!r}); pure-Python fallback will be used")
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
