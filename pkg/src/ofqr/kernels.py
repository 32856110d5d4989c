"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``OFQR_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

from ofqr import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("OFQR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ofqr import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

transfer_block = _impl.transfer_block
jacobi_sweep = _impl.jacobi_sweep
im2col = _impl.im2col
col2im = _impl.col2im


def backends() -> dict:
    """All importable implementations keyed by name (for tests and benchmarks)."""
    found = {"python": _kernels_py}
    try:
        from ofqr import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
