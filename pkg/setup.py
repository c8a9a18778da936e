import os

import numpy
from setuptools import setup, Extension

# OPTOSYNC_NO_EXT=1 installs the pure-Python fallback only.
ext_modules = []
if not os.environ.get("OPTOSYNC_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "optosync._core",
                ["src/optosync/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
