"""Select the compiled kernels when available, else the pure-Python twins.

Set ``ECDLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python_kernels

if os.environ.get("ECDLAB_PURE_PYTHON", "") not in ("", "0"):
    kernels = python_kernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "compiled"
    except ImportError:
        kernels = python_kernels
        BACKEND = "python"


def compiled_kernels():
    """The extension module, or None when it was not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
