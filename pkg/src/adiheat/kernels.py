"""Kernel backend selection.

The compiled extension is used when it is importable; otherwise, or when
``ADIHEAT_BACKEND=python`` is set, the numpy implementation is used.
"""
from __future__ import annotations

import importlib
import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

BACKENDS = ("cython", "python")


def _load_compiled():
    try:
        return importlib.import_module("adiheat._kernels")
    except ImportError as exc:
        log.debug("compiled kernels unavailable: %s", exc)
        return None


_compiled = _load_compiled()


def available() -> list[str]:
    return [name for name in BACKENDS if name == "python" or _compiled is not None]


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        name = os.environ.get("ADIHEAT_BACKEND") or ("cython" if _compiled is not None else "python")
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("adiheat._kernels is not built; run `pip install -e . --no-build-isolation`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")


default = get_backend()
