"""Kernel backend selection.

The compiled extension is used when importable; set ``SNAPSIM_PURE=1`` to
force the pure-Python fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("SNAPSIM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

EQUAL = _kernels_py.EQUAL
BEFORE = _kernels_py.BEFORE
AFTER = _kernels_py.AFTER
CONCURRENT = _kernels_py.CONCURRENT

merge = _impl.merge
compare_code = _impl.compare_code
bss_deliverable = _impl.bss_deliverable
first_deliverable = _impl.first_deliverable
first_blocking = _impl.first_blocking
# None when only the pure-Python buffer in transport.py is available.
CausalBuffer = getattr(_impl, "CausalBuffer", None)

__all__ = ["BACKEND", "merge", "compare_code", "bss_deliverable",
           "first_deliverable", "first_blocking", "EQUAL", "BEFORE", "AFTER", "CONCURRENT"]
