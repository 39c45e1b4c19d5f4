"""Kernel backend selection.

The compiled extension is preferred when importable; ``SGSN_PURE_PYTHON=1``
forces the NumPy fallback. ``kernels`` is the module the rest of the package
calls into.
"""

import os

if os.environ.get("SGSN_PURE_PYTHON"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
