"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``DECOF_PURE_PYTHON=1`` to force the numpy path.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("DECOF_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return names
    return names + ["cython"]


def get_impl(name=None):
    """Return the kernel module named ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def convolve_axis0(padded, weights):
    return _impl.convolve_axis0(padded, weights)


def resize_bilinear(img, y0, y1, fy, x0, x1, fx):
    return _impl.resize_bilinear(img, y0, y1, fy, x0, x1, fx)


def jpeg_plane_roundtrip(plane, qtable, basis):
    return _impl.jpeg_plane_roundtrip(plane, qtable, basis)
