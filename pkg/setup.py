"""Build script: compiles the optional Cython evaluation kernels.

If Cython or a C compiler is unavailable the install still succeeds and the
package falls back to the pure-numpy kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "delaysnn._evalcore",
                sources=["src/delaysnn/_evalcore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"delaysnn: skipping compiled kernels ({exc})")

setup(ext_modules=ext_modules)
