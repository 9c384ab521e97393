import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "uplink_isac._pg_kernel",
    ["src/uplink_isac/_pg_kernel.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
    optional=True,  # fall back to the NumPy kernel when no compiler is available
)

setup(ext_modules=cythonize([ext], language_level=3))
