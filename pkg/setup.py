import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RELAYSEL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "relaysel._episode",
                    ["src/relaysel/_episode.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
