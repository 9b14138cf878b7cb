"""Build script: compiles the optional Cython influence core.

The package works without the extension (a NumPy fallback is selected at
import time), so any compiler/Cython failure downgrades to a warning.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"WARNING: building the Cython core failed ({exc}); "
                  "viscobem will use the pure-NumPy backend", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: {ext.name} failed to compile ({exc}); "
                  "viscobem will use the pure-NumPy backend", file=sys.stderr)


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; skipping Cython core", file=sys.stderr)
        return []
    ext = Extension(
        "viscobem._core._influence_cy",
        ["src/viscobem/_core/_influence_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
