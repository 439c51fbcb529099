"""Build the optional compiled kernels.

If Cython or a C compiler is missing the package still installs and runs
on the pure-Python fallback.
"""

import sys

from setuptools import setup

ext_modules = []
flags = [] if sys.platform == "win32" else ["-O3"]
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("dampwave.kernels._tridiag", ["src/dampwave/kernels/_tridiag.pyx"],
                   extra_compile_args=flags)],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
