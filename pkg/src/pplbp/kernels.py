"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback. ``PPLBP_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback
from ._fallback import ConvergenceError, margin, neighbor_offsets

_backends = {"python": _fallback}
try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _kernels = None
else:
    _backends["cython"] = _kernels

available = tuple(_backends)


def _select():
    want = os.environ.get("PPLBP_BACKEND", "").strip().lower()
    if want:
        if want not in _backends:
            raise ImportError(f"PPLBP_BACKEND={want!r} unavailable (have {', '.join(_backends)})")
        return want
    return "cython" if "cython" in _backends else "python"


BACKEND = _select()


def get(name: str | None = None):
    """Kernel module by name, or the active one."""
    return _backends[name or BACKEND]


def stencil_matvec(x, wx, wy):
    return _backends[BACKEND].stencil_matvec(x, wx, wy)


def pcg(wx, wy, diag, b, x0, tol, max_iter):
    return _backends[BACKEND].pcg(wx, wy, diag, b, x0, tol, max_iter)


def lbp_codes(data, P, R):
    return _backends[BACKEND].lbp_codes(data, P, R)


__all__ = [
    "BACKEND",
    "ConvergenceError",
    "available",
    "get",
    "lbp_codes",
    "margin",
    "neighbor_offsets",
    "pcg",
    "stencil_matvec",
]
