"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``AMEM_PURE_PYTHON=1``) the numpy fallback is used.  Both expose the same
five functions.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("AMEM_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

python_kernels = _fallback
