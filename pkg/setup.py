"""Build script. The Cython kernel is optional: if it fails to compile the
package still works through the pure numpy fallback."""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("TORUSRENORM_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "torusrenorm._kernels",
                    ["src/torusrenorm/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    language="c++",
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        sys.stderr.write(f"warning: building without compiled kernels ({exc})\n")
        ext_modules = []

setup(ext_modules=ext_modules)
