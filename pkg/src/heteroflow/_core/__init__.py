"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback takes over. Set ``HETEROFLOW_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("HETEROFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        kernels = _compiled
        BACKEND = "compiled"


def get_backend(name=None):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


__all__ = ["BACKEND", "kernels", "get_backend"]
