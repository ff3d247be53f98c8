from setuptools import Extension, setup

# The extension is an optional accelerator: without Cython (or without a
# working C toolchain) the package installs anyway and the pure-Python
# kernels take over at import time.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "platoonflow._kernels_cy",
                ["src/platoonflow/_kernels_cy.pyx"],
                # -ffp-contract=off: both backends must be bit-equal,
                # fused multiply-add would break that.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
