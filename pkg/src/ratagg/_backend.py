"""Pick the load-indicator kernel at import time.

The compiled extension is preferred; set ``AGG_BACKEND=python`` to force the
numpy fallback.
"""
from __future__ import annotations

import os
import warnings

from . import _opt_load_py

try:
    from . import _opt_load_c
except ImportError:  # extension not built
    _opt_load_c = None

BACKENDS = {"python": _opt_load_py}
if _opt_load_c is not None:
    BACKENDS["cython"] = _opt_load_c

_requested = os.environ.get("AGG_BACKEND", "").strip().lower()
NAME = "cython" if "cython" in BACKENDS else "python"
if _requested in BACKENDS:
    NAME = _requested
elif _requested:
    warnings.warn(f"AGG_BACKEND={_requested!r} unavailable (have {sorted(BACKENDS)}); using {NAME}",
                  RuntimeWarning, stacklevel=2)

kernel = BACKENDS[NAME]


def get(name: str | None = None):
    """Return ``(name, module)`` for the requested backend (default: active one)."""
    if name is None:
        return NAME, kernel
    try:
        return name, BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
