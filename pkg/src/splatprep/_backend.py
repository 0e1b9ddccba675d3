"""Selects the compiled kernel extension, falling back to pure numpy.

Set SPLATPREP_PURE=1 to force the fallback (used by the benchmark and the
backend-equivalence tests).
"""

import os

from . import _kernels_py

_SELECTED = None


def _select():
    if os.environ.get("SPLATPREP_PURE", "") not in ("", "0"):
        return _kernels_py
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        return _kernels_py


def kernels():
    """The active kernel module (compiled extension or numpy fallback)."""
    global _SELECTED
    if _SELECTED is None:
        _SELECTED = _select()
    return _SELECTED


def backend_name() -> str:
    return "compiled" if kernels().COMPILED else "pure"
