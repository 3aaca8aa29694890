import os

from setuptools import Extension, setup

# The compiled kernel is optional: without a compiler (or with
# CCPNET_PURE_PYTHON=1) the package falls back to the numpy kernel.
ext_modules = []
if os.environ.get("CCPNET_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "ccpnet._ckernel",
                    ["src/ccpnet/_ckernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
