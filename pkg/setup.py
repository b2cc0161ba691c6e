"""Build script for the compiled simulation core.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed compile degrades to a slow install instead of a
broken one.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "softsnake._core",
        ["src/softsnake/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps float semantics identical to the pure-Python
        # kernel (no FMA contraction), so the two backends agree bit-for-bit.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"softsnake: skipping compiled core ({exc}); "
                     "falling back to the pure-Python kernel\n")

setup(ext_modules=ext_modules)
