"""Selects the batch-kernel backend at import time.

The compiled extension (hyperstab._ckernels) is preferred when present; the
numpy fallback (hyperstab._pykernels) is a drop-in twin. Set
HYPERSTAB_KERNELS=py to force the fallback, or =c to require the extension.
"""

from __future__ import annotations

import os

_choice = os.environ.get("HYPERSTAB_KERNELS", "auto")

if _choice == "py":
    from . import _pykernels as kernels

    BACKEND = "python"
elif _choice == "c":
    from . import _ckernels as kernels  # noqa: F401

    BACKEND = "compiled"
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _pykernels as kernels  # type: ignore[no-redef]

        BACKEND = "python"


def backend_name() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
