"""Build helper for the optional compiled codec.

The package is pure Python except for the wire codec hot path, which is
also available as a Cython extension. The extension is optional: if it
cannot be built (or Cython is missing) the package falls back to the
struct-based codec in roadtwin.protocol._codec_py at import time.
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
                "roadtwin.protocol._codec",
                ["src/roadtwin/protocol/_codec.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
