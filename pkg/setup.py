import os

from setuptools import setup

# The compiled kernels are optional: if Cython (or a C compiler) is missing,
# the package still installs and falls back to the numpy implementation in
# crossfv._core_numpy at import time.
ext_modules = []
if not os.environ.get("CROSSFV_SKIP_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "crossfv._core",
            ["src/crossfv/_core.pyx"],
            # -ffp-contract=off keeps the compiled kernels bitwise identical
            # to the numpy backend (no fused multiply-adds).
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
