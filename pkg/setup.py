"""Build the optional compiled kernels.

The package works without them: ``expfln.kernels`` falls back to numpy
loops when ``expfln._kernels`` cannot be imported.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("EXPFLN_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("expfln._kernels", ["src/expfln/_kernels.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )

setup(ext_modules=ext_modules)
