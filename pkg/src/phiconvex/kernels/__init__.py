"""Hot scan kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``PHICONVEX_DISABLE_JIT`` is set to a non-empty value other than
``0``. Both paths scan in the same C order and apply the same tie rule, so
they return the same witness indices.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _numpy

ENV_FLAG = "PHICONVEX_DISABLE_JIT"

try:
    from . import _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

_BACKENDS: dict[str, ModuleType] = {"numpy": _numpy}
if HAVE_NUMBA:
    _BACKENDS["numba"] = _numba


def _jit_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "") not in ("", "0")


def backend_name() -> str:
    return "numba" if HAVE_NUMBA and not _jit_disabled() else "numpy"


def get_backend(name: str | None = None) -> ModuleType:
    """Kernel module by name; ``None`` follows the environment flag."""
    name = name or backend_name()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(_BACKENDS)}") from None


def available_backends() -> list[str]:
    return sorted(_BACKENDS)
