"""Build hook for the optional compiled kernels.

If Cython or a C compiler is missing, the package installs without the
extension and falls back to the numpy implementation at import time.
"""
import os
import sys

from setuptools import setup


def _extensions():
    if os.environ.get("RICCICERT_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        sys.stderr.write(f"riccicert: building without compiled kernels ({exc})\n")
        return []
    ext = Extension(
        "riccicert._kernels",
        ["src/riccicert/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=_extensions())
