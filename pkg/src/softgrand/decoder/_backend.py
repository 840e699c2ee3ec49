"""Pick the kernel implementation at import time.

The compiled extension is used when it imports; setting the environment
variable ``SOFTGRAND_PURE_PYTHON`` to a non-empty value forces the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_KERNELS = {"python": _pykernels}
if _ckernels is not None:
    _KERNELS["cython"] = _ckernels


def available() -> list[str]:
    return sorted(_KERNELS)


def default_name() -> str:
    if os.environ.get("SOFTGRAND_PURE_PYTHON") or _ckernels is None:
        return "python"
    return "cython"


def get_kernels(name: str | None = None) -> ModuleType:
    """Kernel module by name (``"cython"``, ``"python"``), or the default one."""
    key = default_name() if name is None else name
    try:
        return _KERNELS[key]
    except KeyError:
        raise ValueError(f"kernel backend {key!r} unavailable; have {available()}") from None


BACKEND = default_name()
