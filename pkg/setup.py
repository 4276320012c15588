import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "kscollapse._kernels_cy",
                ["src/kscollapse/_kernels_cy.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: install pure-python only, the numpy kernel is
    # selected automatically at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
