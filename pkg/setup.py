"""Build script for the optional compiled swap kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes row refinement much faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sparseswaps._kernels",
                ["src/sparseswaps/_kernels.pyx"],
                # -ffp-contract=off keeps the compiled kernel's arithmetic
                # aligned with the NumPy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

# name/packages/package_dir are repeated here so pre-PEP-621 setuptools
# (e.g. the version bundled with Ubuntu venvs) can still build in place;
# modern toolchains take everything from pyproject.toml.
setup(
    name="sparseswaps",
    packages=["sparseswaps"],
    package_dir={"": "src"},
    ext_modules=ext_modules,
)
