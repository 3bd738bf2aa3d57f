import sys

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


class OptionalBuildExt(build_ext):
    """Skip the extension when it cannot be compiled; the numpy path still works."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernel not built ({exc}); using numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback", file=sys.stderr)


openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "wte_reach._llf",
                ["src/wte_reach/_llf.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no -ffast-math / -march=native: results must be reproducible across machines
                extra_compile_args=["-O3", "-fno-fast-math", "-ffp-contract=off", *openmp],
                extra_link_args=openmp,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
