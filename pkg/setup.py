"""Build script: compiles the optional evaluation kernel.

The package works without the extension (a pure-Python twin is selected at
import time), so the build degrades gracefully on hosts without a C
toolchain.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "c2ord._kernel._speedups",
        ["src/c2ord/_kernel/_speedups.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={"language_level": "3", "boundscheck": False},
    )

setup(ext_modules=ext_modules)
