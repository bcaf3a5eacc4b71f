"""Kernel backend selection: compiled extension when available, numpy otherwise."""

from __future__ import annotations

import os


def _load():
    if os.environ.get("NFBDD_PURE") != "1":
        try:
            from . import _kernels

            return _kernels, "cython"
        except ImportError:
            pass
    from . import _kernels_py

    return _kernels_py, "python"


KERNELS, BACKEND = _load()


def backend_name() -> str:
    """Which eval kernel is active: 'cython' or 'python'."""
    return BACKEND
