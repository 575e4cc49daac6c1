"""Build script for the compiled sum-factorization kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs performance.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "patchmg.kernels._sumfact",
                sources=["src/patchmg/kernels/_sumfact.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-march=native"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
