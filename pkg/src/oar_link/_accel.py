"""Backend switch for the hot loops.

Kernels are written once in the numba-compatible subset of Python (see
``_ged_kernels.py``). When numba is importable and ``OAR_LINK_NO_JIT`` is unset
or "0", the compiled variant is active; otherwise the same source runs as
plain Python.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional at runtime
    numba = None

JIT_DISABLED = os.environ.get("OAR_LINK_NO_JIT", "0").strip().lower() not in ("", "0", "false", "no")
USE_JIT = numba is not None and not JIT_DISABLED
BACKEND = "numba" if USE_JIT else "python"
