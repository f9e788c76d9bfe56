"""Hot-kernel backends: compiled Cython core with a pure-numpy fallback.

The compiled extension is used when importable; set SPLATSHADE_BACKEND to
``numpy`` or ``cython`` to force one. Both implement the same contracts and
the same deterministic RNG streams, so results agree to float32 precision.
"""

from __future__ import annotations

import os

from . import np_impl

try:
    from . import cy_impl

    _HAVE_CYTHON = True
except ImportError:
    cy_impl = None
    _HAVE_CYTHON = False

_FORCED = os.environ.get("SPLATSHADE_BACKEND", "").strip().lower()
if _FORCED and _FORCED not in ("numpy", "cython"):
    raise RuntimeError(f"SPLATSHADE_BACKEND must be 'numpy' or 'cython', got {_FORCED!r}")
if _FORCED == "cython" and not _HAVE_CYTHON:
    raise RuntimeError("SPLATSHADE_BACKEND=cython but the compiled extension is unavailable")

DEFAULT_BACKEND = _FORCED or ("cython" if _HAVE_CYTHON else "numpy")


def available_backends():
    return ("cython", "numpy") if _HAVE_CYTHON else ("numpy",)


def get_backend(name: str | None = None):
    name = name or DEFAULT_BACKEND
    if name == "numpy":
        return np_impl
    if name == "cython":
        if not _HAVE_CYTHON:
            raise RuntimeError("compiled kernel extension is not available")
        return cy_impl
    raise ValueError(f"unknown backend {name!r}")
