"""Kernel backend selection.

The compiled Cython backend is used when its extension module imported
successfully; otherwise the vectorized NumPy fallback takes over.  The
``CPMFIT_PURE_PYTHON=1`` environment variable forces the fallback, and
``set_backend``/``use_backend`` switch at runtime (used by the tests and
the benchmark).
"""

from __future__ import annotations

import contextlib
import os

from . import _pure

try:
    from . import _core
except ImportError:  # extension not built; fallback only
    _core = None

if os.environ.get("CPMFIT_PURE_PYTHON") == "1" or _core is None:
    _active = _pure
else:
    _active = _core


def available_backends():
    names = ["pure"]
    if _core is not None:
        names.insert(0, "compiled")
    return tuple(names)


def backend_name() -> str:
    return _active.NAME


def get_backend(name=None):
    if name is None:
        return _active
    if name == "pure":
        return _pure
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled backend is not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def set_backend(name: str):
    global _active
    _active = get_backend(name)


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch kernel backends."""
    global _active
    prev = _active
    _active = get_backend(name)
    try:
        yield _active
    finally:
        _active = prev


def active():
    return _active
