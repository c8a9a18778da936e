"""Kernel backend selection.

The compiled extension is used when importable; ``OPTOSYNC_BACKEND=python``
forces the numpy fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels

if os.environ.get("OPTOSYNC_BACKEND", "").lower() == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _core as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels
        BACKEND = "python"

try:
    from . import _core as compiled_kernels
except ImportError:
    compiled_kernels = None
