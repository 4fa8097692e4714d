from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    # No -ffast-math and contraction off: the compiled kernels must produce
    # bit-identical IEEE-754 results to the pure-Python fallback.
    ext_modules = cythonize(
        [
            Extension(
                "tvspc._core",
                sources=["src/tvspc/_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Without Cython the package still installs; tvspc falls back to the
    # pure-Python kernels at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
