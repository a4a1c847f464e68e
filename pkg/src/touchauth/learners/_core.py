"""Kernel backend chosen at import: the compiled extension when it is built,
the numpy fallback otherwise (or when ``TOUCHAUTH_PURE_PYTHON=1``)."""
import os
import warnings

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("TOUCHAUTH_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError as exc:  # pragma: no cover - depends on the build
        warnings.warn(f"compiled kernels unavailable ({exc}); using the numpy fallback",
                      RuntimeWarning, stacklevel=2)
        _compiled = None
    else:
        BACKEND = "cython"
else:
    _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py

gini_split = _impl.gini_split
newton_split = _impl.newton_split
smo = _impl.smo
