from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "cargotrace.scan._fast",
        ["src/cargotrace/scan/_fast.pyx"],
        extra_compile_args=["-O2"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
