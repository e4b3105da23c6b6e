"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when it is
missing or when ``SMOOTHLAB_PURE_PYTHON`` is set to a non-empty value other
than ``0``.
"""
from __future__ import annotations

import os

from smoothlab import _pykernels

_force_python = os.environ.get("SMOOTHLAB_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend forced")
    from smoothlab import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

wht_inplace = _impl.wht_inplace
span_images = _impl.span_images
# numpy's bitwise_count uses the hardware instruction; the portable compiled
# build does not, so it loses this one kernel (see benchmarks/bench_kernels.py)
popcount = _pykernels.popcount
parity_products = _impl.parity_products


def available_backends() -> dict:
    """Map backend name to kernel module for every backend that imports."""
    backends = {"python": _pykernels}
    try:
        from smoothlab import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends
