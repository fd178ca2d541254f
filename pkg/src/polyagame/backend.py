"""Kernel backend selection.

Two interchangeable kernel modules exist: kernels_numba (jitted, default
when numba imports cleanly) and kernels_numpy (pure numpy). The env var
POLYA_BACKEND picks one at import time (values: numba, numpy, auto);
use() switches at runtime. Numeric results agree to floating-point
noise, not bit-for-bit, since the two enumerate outcomes in different
orders.
"""

from __future__ import annotations

import os

from . import kernels_numpy

try:
    from . import kernels_numba
except ImportError:  # pragma: no cover - exercised only without numba
    kernels_numba = None

_CHOICES = ("numba", "numpy", "auto")


def _resolve(name: str):
    if name not in _CHOICES:
        raise ValueError(f"unknown backend {name!r}; choose from {_CHOICES}")
    if name == "auto":
        name = "numba" if kernels_numba is not None else "numpy"
    if name == "numba":
        if kernels_numba is None:
            raise ImportError("numba backend requested but numba is not importable")
        return "numba", kernels_numba
    return "numpy", kernels_numpy


_name, _kernels = _resolve(os.environ.get("POLYA_BACKEND", "auto"))


def use(name: str) -> str:
    """Switch the active backend; returns the previously active name."""
    global _name, _kernels
    previous = _name
    _name, _kernels = _resolve(name)
    return previous


def kernels():
    """Module providing the currently active kernel implementations."""
    return _kernels


def active() -> str:
    return _name


def available() -> tuple:
    return ("numba", "numpy") if kernels_numba is not None else ("numpy",)
