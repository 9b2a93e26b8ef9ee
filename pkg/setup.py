import os

from setuptools import Extension, setup

# The compiled kernels must be bit-identical to their pure-Python twin:
#  -ffp-contract=off      no FMA contraction (a*b+c fused would round once);
#  -fno-builtin-sincos    gcc otherwise merges cos(x)+sin(x) into glibc
#                         sincos(), whose results can differ by 1 ulp from
#                         separate sin()/cos() calls (the ones the Python
#                         math module makes).
ext_modules = []
if os.environ.get("COLLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "collabboard.geometry._kernels",
                    ["src/collabboard/geometry/_kernels.pyx"],
                    extra_compile_args=["-O3", "-ffp-contract=off",
                                        "-fno-builtin-sin", "-fno-builtin-cos",
                                        "-fno-builtin-sincos"],
                    optional=True,
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
