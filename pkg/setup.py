"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing compiler or Cython only costs speed. Set
VOLSIM_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("VOLSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        # No -ffast-math: the compiled core must be bit-identical to the
        # pure backend (same IEEE ops through the same libm).
        ext_modules = cythonize(
            [
                Extension(
                    "volsim._kernels._core",
                    ["src/volsim/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
