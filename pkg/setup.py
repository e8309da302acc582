import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wavephase._kernels",
                ["src/wavephase/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-Python fallback is selected at import time; the package works
    # without the compiled stepper, just slower
    ext_modules = []

setup(ext_modules=ext_modules)
