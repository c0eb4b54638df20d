"""Build script: compiles the optional transport-solver extension.

The package works without the extension (a pure-Python/numpy twin is
selected at import time); the build therefore tolerates a missing or
failing C toolchain.
"""

import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            print(f"ricciprobe: extension build skipped ({exc!r}); "
                  "pure-Python solver core will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"ricciprobe: build of {ext.name} failed ({exc!r}); "
                  "pure-Python solver core will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "ricciprobe._core._speedups",
        ["src/ricciprobe/_core/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
