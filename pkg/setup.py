import os

from setuptools import setup

# The compiled kernel is optional: the package falls back to the pure Python
# implementation in opdk._kernel.pykernel when the extension is absent.
# Set OPDK_NO_EXT=1 to skip building it (e.g. on a box without a C compiler).
ext_modules = []
if os.environ.get("OPDK_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        extensions = [
            Extension(
                "opdk._kernel._fastkernel",
                ["src/opdk/_kernel/_fastkernel.pyx"],
            )
        ]
        ext_modules = cythonize(
            extensions, compiler_directives={"language_level": "3"}
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
