from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy

# -ffp-contract=off keeps the compiled kernels bit-compatible with the pure
# numpy fallback (no silent FMA fusion of a*b+c).
ext = Extension(
    "splatprep._kernels",
    ["src/splatprep/_kernels.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    ),
)
