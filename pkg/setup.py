"""Build script for the optional compiled variation kernels.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes the per-grid-point variation DP fast.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "dimvar._kernels._varcy",
        ["src/dimvar/_kernels/_varcy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
