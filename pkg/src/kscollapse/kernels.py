"""Stepping-kernel backend selection.

The compiled extension is used when it imported cleanly; set
``KSCOLLAPSE_FORCE_PURE=1`` to force the numpy fallback (used by the parity
test and the benchmark).  Steps that inject a manufactured source always go
through the numpy kernel.
"""
from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels_cy  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _kernels_cy = None
    HAVE_COMPILED = False

STATUS_OK = _kernels_py.STATUS_OK
STATUS_DT_UNDERFLOW = _kernels_py.STATUS_DT_UNDERFLOW


def force_pure() -> bool:
    return os.environ.get("KSCOLLAPSE_FORCE_PURE", "") == "1"


def backend_name() -> str:
    return "compiled" if (HAVE_COMPILED and not force_pure()) else "pure"


def advance(*args, source_fn=None, backend: str | None = None):
    """Dispatch to the active backend (see module docstring)."""
    use = backend or backend_name()
    if source_fn is not None or use == "pure" or not HAVE_COMPILED:
        return _kernels_py.advance(*args, source_fn=source_fn)
    return _kernels_cy.advance(*args, source_fn=None)
