"""Build script for the optional compiled assignment kernel.

The package works without the extension (a NumPy fallback is selected at
import time), but the compiled kernel is considerably faster on the
500-2000 point assignment problems the Monte Carlo experiments solve in
bulk, so we build it by default.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "gotlab._lapjv",
        ["src/gotlab/_lapjv.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "embedsignature": True,
        },
    )
)
