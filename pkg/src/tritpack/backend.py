"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the numpy
fallback serves every call.  Both implement the surface documented in
`_kernels_py` with bitwise-identical results, so the choice is purely a
speed matter.  Set TRITPACK_BACKEND=python or =compiled to force one.
"""

from __future__ import annotations

import os
from types import ModuleType

from tritpack import _kernels_py

try:
    from tritpack import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None

ENV_VAR = "TRITPACK_BACKEND"

_BY_NAME: dict[str, ModuleType | None] = {
    "python": _kernels_py,
    "compiled": _kernels,
}


def available() -> tuple[str, ...]:
    """Backend names usable in this process, preferred first."""
    names = [name for name, mod in _BY_NAME.items() if mod is not None]
    names.sort(key=lambda n: n != "compiled")
    return tuple(names)


def default_name() -> str:
    """The backend used when callers don't ask for one.

    Honors the TRITPACK_BACKEND environment variable (re-read on every
    call so tests can flip it), otherwise prefers the compiled extension.
    """
    forced = os.environ.get(ENV_VAR)
    if forced is not None:
        if forced not in _BY_NAME:
            raise ValueError(
                f"{ENV_VAR}={forced!r}: unknown backend, expected one of {sorted(_BY_NAME)}"
            )
        if _BY_NAME[forced] is None:
            raise ValueError(f"{ENV_VAR}={forced!r}: backend not importable in this build")
        return forced
    return "compiled" if _kernels is not None else "python"


def resolve(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` (default: `default_name()`)."""
    if name is None:
        name = default_name()
    if name not in _BY_NAME:
        raise ValueError(f"unknown backend {name!r}, expected one of {sorted(_BY_NAME)}")
    mod = _BY_NAME[name]
    if mod is None:
        raise ValueError(f"backend {name!r} is not importable in this build")
    return mod
