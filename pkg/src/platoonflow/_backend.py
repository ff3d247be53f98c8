"""Kernel backend selection.

The compiled extension is preferred when present; the pure-Python module
is the fallback and the semantic reference.  Set ``PLATOONFLOW_BACKEND``
to ``python`` or ``cython`` to force a choice (forcing ``cython`` raises
if the extension is missing, rather than silently degrading).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("PLATOONFLOW_BACKEND", "").strip().lower()

if _FORCED == "python":
    kernels = _kernels_py
    BACKEND = "python"
elif _FORCED == "cython":
    from . import _kernels_cy as kernels  # type: ignore[no-redef]

    BACKEND = "cython"
elif _FORCED:
    raise ImportError(
        f"PLATOONFLOW_BACKEND={_FORCED!r}: expected 'python' or 'cython'"
    )
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
