"""Backend selection for the inventory kernel.

The compiled Cython kernel is used when it was built; otherwise the numpy
implementation is loaded.  Set ``AGRIFOOT_BACKEND=numpy`` to force the
fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("AGRIFOOT_BACKEND", "auto").lower()

if _requested == "numpy":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
evaluate_devices = _impl.evaluate_devices


def available_backends() -> dict:
    """Name -> ``evaluate_devices`` for every importable backend."""
    out = {"numpy": _kernels_py.evaluate_devices}
    try:
        from . import _kernels_cy
    except ImportError:
        pass
    else:
        out["cython"] = _kernels_cy.evaluate_devices
    return out
