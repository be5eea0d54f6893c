import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# No -march=native / -ffast-math: the compiled kernels must reproduce the
# pure-Python fallback bit for bit (no FMA contraction, IEEE ordering).
extensions = [
    Extension(
        "xrdenoise._ckernels",
        ["src/xrdenoise/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
