from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; geoaudit falls back to numpy kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("geoaudit._jetkernel", ["src/geoaudit/_jetkernel.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
