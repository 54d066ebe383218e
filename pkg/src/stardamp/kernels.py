"""Kernel backend selection.

The compiled Cython kernels are used when importable; set
``STARDAMP_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("STARDAMP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
cn_step = _impl.cn_step
nl_damp_step = _impl.nl_damp_step


def available_backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
