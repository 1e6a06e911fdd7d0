"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a missing Cython or C compiler only costs
speed, never correctness.  -ffp-contract=off keeps the compiler from fusing
multiply-add chains into FMAs; the two backends promise bitwise-identical
float32 results and contraction would silently break that.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tritpack._kernels",
                sources=["src/tritpack/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("Cython not available; building without the compiled kernels")

setup(ext_modules=ext_modules)
