import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    [Extension("koopgauss._kernels", ["src/koopgauss/_kernels.pyx"], include_dirs=[np.get_include()])],
    compiler_directives={"language_level": "3"},
)

# the extension is optional: koopgauss.kernels falls back to numpy when it is missing
for ext in ext_modules:
    ext.optional = True

setup(ext_modules=ext_modules)
