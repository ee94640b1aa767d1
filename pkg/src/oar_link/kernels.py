"""Access to the compiled and pure-Python variants of the hot kernels.

``active`` follows the ``OAR_LINK_NO_JIT`` switch; ``python_kernels()`` and
``jit_kernels()`` give explicit access for tests and benchmarks.
"""

from __future__ import annotations

import importlib.util
import sys
import threading
from functools import lru_cache
from pathlib import Path

from . import _accel

_SRC = Path(__file__).with_name("_ged_kernels.py")
_LOCK = threading.Lock()


def _load(use_jit: bool):
    name = "oar_link._ged_kernels_" + ("jit" if use_jit else "py")
    with _LOCK:
        if name in sys.modules:
            return sys.modules[name]
        spec = importlib.util.spec_from_file_location(name, _SRC)
        mod = importlib.util.module_from_spec(spec)
        mod.USE_JIT = use_jit
        spec.loader.exec_module(mod)
        # publish only once fully executed; worker threads may race here
        sys.modules[name] = mod
        return mod


@lru_cache(maxsize=None)
def python_kernels():
    return _load(False)


@lru_cache(maxsize=None)
def jit_kernels():
    if _accel.numba is None:
        raise RuntimeError("numba is not installed")
    return _load(True)


def active():
    return jit_kernels() if _accel.USE_JIT else python_kernels()
