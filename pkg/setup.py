import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("TOUCHAUTH_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "touchauth.learners._kernels",
                ["src/touchauth/learners/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no FMA contraction: the compiled and numpy paths must agree bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
