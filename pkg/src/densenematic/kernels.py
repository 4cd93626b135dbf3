"""Kernel selection: the compiled extension when it imports, numpy otherwise.

Set ``DENSENEMATIC_PURE_PYTHON=1`` to force the numpy path.
"""
import os

from . import _kernels_py

BACKEND = "python"
tilted_moments = _kernels_py.tilted_moments
dual_newton = _kernels_py.dual_newton

if os.environ.get("DENSENEMATIC_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        tilted_moments = _compiled.tilted_moments
        dual_newton = _compiled.dual_newton


def get_backend(name=None):
    """Return a namespace exposing ``tilted_moments`` and ``dual_newton``.

    ``name`` is ``"python"``, ``"cython"`` or None for the active default.
    """
    if name is None:
        name = BACKEND
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError("unknown kernel backend %r" % name)
