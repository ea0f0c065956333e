"""Builds the optional compiled kernel core.

The package works without it (a numpy fallback is selected at import time),
so a missing Cython or C compiler only costs speed, not functionality.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "liftflow._kernels._core",
                ["src/liftflow/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off: the numpy fallback and the brute-force
                # oracles must agree with these kernels bit for bit, so FMA
                # contraction of the distance sums is not allowed.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
