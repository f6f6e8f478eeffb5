import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build without the compiled core
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("HETEROFLOW_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "heteroflow._core._kernels",
                ["src/heteroflow/_core/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
