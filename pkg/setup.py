"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python backend is selected
at import time), but training at experiment scale needs the compiled path.
Float semantics must match the pure backend bit for bit, so fused
multiply-add contraction is disabled explicitly.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "lukmlp._backend._kernels",
        ["src/lukmlp/_backend/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

if cythonize is not None:
    setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
else:
    setup()
