"""Build script for the optional compiled similarity-scan extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); compiling it makes cache scans
roughly two orders of magnitude faster. See benchmarks/bench_kernels.py.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "semcache._simscan",
                ["src/semcache/_simscan.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
