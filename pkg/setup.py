"""Build script: compiles the optional batch-kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the build therefore marks it optional so that a
missing compiler degrades gracefully instead of failing the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hyperstab._ckernels",
                ["src/hyperstab/_ckernels.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: install as pure Python.
    ext_modules = []

setup(ext_modules=ext_modules)
