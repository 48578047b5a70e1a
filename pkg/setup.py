"""Build script for the optional compiled NN kernel.

The extension is a speed path only: if Cython or a C compiler is missing the
install proceeds and `privtext._kernels` falls back to the numpy backend.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "privtext._kernels._nncore",
                ["src/privtext/_kernels/_nncore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError as exc:  # pragma: no cover - depends on build host
    print(f"privtext: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
