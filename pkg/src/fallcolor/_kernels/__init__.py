"""Hot-kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. Set FALLCOLOR_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _numpy

if os.environ.get("FALLCOLOR_PURE_PYTHON"):
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"

assign_nearest = _impl.assign_nearest
tree_apply = _impl.tree_apply
ensemble_apply = _impl.ensemble_apply
best_boundary = _impl.best_boundary

__all__ = ["BACKEND", "assign_nearest", "tree_apply", "ensemble_apply",
           "best_boundary"]
