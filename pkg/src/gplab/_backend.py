"""Kernel backend selection.

The compiled extension is used when it imports; ``GPLAB_BACKEND=python``
forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("GPLAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        kernels = _compiled
        NAME = "compiled"


def low_level_callable(name: str):
    """``scipy.LowLevelCallable`` for a compiled integrand, or ``None``."""
    if NAME != "compiled":
        return None
    from scipy import LowLevelCallable

    return LowLevelCallable.from_cython(kernels, name)
