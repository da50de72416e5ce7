"""Build the optional compiled kernel.

The package works without it; ``ratagg._backend`` falls back to the numpy
implementation when the extension cannot be imported.
"""
import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # pragma: no cover
    cythonize = None

if cythonize is not None and not os.environ.get("RATAGG_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "ratagg._opt_load_c",
                ["src/ratagg/_opt_load_c.pyx"],
                libraries=["m"],
                # no -ffast-math / FMA contraction: the kernel must match the
                # numpy fallback and the decentralized simulation bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
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


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"warning: compiled kernel not built ({exc}); using numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
