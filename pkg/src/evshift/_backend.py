"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``EVSHIFT_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("EVSHIFT_BACKEND", "").lower() != "python":
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = _pykernels
    BACKEND = "python"

AVAILABLE = {"python": python_kernels}
if compiled_kernels is not None:
    AVAILABLE["cython"] = compiled_kernels
