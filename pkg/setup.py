"""Optional compiled simplex kernel; the package falls back to numpy without it."""

import os

import numpy
from setuptools import setup

ext_modules = []
if not os.environ.get("TWTL_RELAX_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            Extension(
                "twtl_relax.solver._simplex_ext",
                ["src/twtl_relax/solver/_simplex_ext.pyx"],
                include_dirs=[numpy.get_include()],
            ),
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
