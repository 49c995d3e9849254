"""Build script for the compiled scan kernels.

The package is fully functional without the extension (a NumPy fallback
is selected at import time), so failures here only cost speed.
``-ffp-contract=off`` keeps the kernel's floating-point arithmetic
operation-for-operation identical to the vectorized fallback.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "cnvscan._kernels",
        ["src/cnvscan/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
