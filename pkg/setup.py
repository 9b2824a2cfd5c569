import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    HAVE_CYTHON = True
except Exception:
    cythonize = None
    HAVE_CYTHON = False

if HAVE_CYTHON:
    ext_modules = cythonize(
        [
            Extension(
                "lqgame._speedups",
                ["src/lqgame/_speedups.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # the package works without the extension (pure-python kernels)
    ext_modules = []

setup(ext_modules=ext_modules)
