"""Variation kernel backend selection.

Prefers the compiled extension, falls back to the NumPy implementation when
the extension is missing or ``DIMVAR_PURE_PYTHON=1`` is set.  Both expose
``dp_chain`` and ``dp_batch`` with identical semantics.
"""

import os

if os.environ.get("DIMVAR_PURE_PYTHON") == "1":
    from dimvar._kernels._varnp import dp_batch, dp_chain

    KERNEL_BACKEND = "python"
else:
    try:
        from dimvar._kernels._varcy import dp_batch, dp_chain

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from dimvar._kernels._varnp import dp_batch, dp_chain

        KERNEL_BACKEND = "python"

__all__ = ["dp_chain", "dp_batch", "KERNEL_BACKEND"]
