"""Kernel selection: the compiled extension when it imports, else pure Python."""

from __future__ import annotations

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

AVAILABLE = ("compiled", "python") if _compiled is not None else ("python",)
DEFAULT = AVAILABLE[0]


def get(name: str = "auto"):
    """Return the kernel module for ``name`` ("auto", "compiled" or "python")."""
    if name == "auto":
        name = DEFAULT
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not built; reinstall with a C compiler and Cython")
        return _compiled
    if name == "python":
        return _pykernel
    raise ValueError(f"unknown backend {name!r}")
