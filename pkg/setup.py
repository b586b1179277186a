"""Build script: compiles the optional Cython core.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time), so a failed compile downgrades to
a warning instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Skip the compiled core if the toolchain is unavailable."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"compiled core skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"compiled core skipped ({exc}); using pure-Python fallback")


try:
    from Cython.Build import cythonize

    # -ffp-contract=off keeps the compiled kernels bit-identical to the
    # pure-Python fallback (no fused multiply-add contraction).
    ext_modules = cythonize(
        [
            Extension(
                "v2vlab._core._speedups",
                ["src/v2vlab/_core/_speedups.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # pragma: no cover - Cython always present in CI
    warnings.warn("Cython not available; building without the compiled core")
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
