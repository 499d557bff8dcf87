"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``ROTODEG_PURE_PYTHON=1`` to force the numpy kernels.
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    if os.environ.get("ROTODEG_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by ROTODEG_PURE_PYTHON")
    from . import _ckernels
except ImportError:
    _ckernels = None

HAVE_COMPILED = _ckernels is not None
BACKEND = "compiled" if HAVE_COMPILED else "numpy"


def rk4_flow(field, z0, knots, h_max, *, backend=None):
    """Dispatch one batch RK4 integration to the best available kernel."""
    backend = backend or BACKEND
    if backend == "compiled" and HAVE_COMPILED and field.kernel is not None:
        kind, params = field.kernel
        return _ckernels.rk4_flow(kind, params, z0, knots, h_max, field.norm_cap)
    return _pykernels.rk4_flow(field.rhs, z0, knots, h_max, field.norm_cap)


def winding_sum(wx, wy, *, backend=None):
    backend = backend or BACKEND
    if backend == "compiled" and HAVE_COMPILED:
        return _ckernels.winding_sum(wx, wy)
    return _pykernels.winding_sum(wx, wy)
