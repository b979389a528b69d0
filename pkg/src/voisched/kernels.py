"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``VOISCHED_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("VOISCHED_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

COMPILED = _impl is not _kernels_py
BACKEND = "cython" if COMPILED else "python"

qkp_objective = _impl.qkp_objective
qkp_exact = _impl.qkp_exact
qkp_greedy = _impl.qkp_greedy
qkp_local_search = _impl.qkp_local_search
reflect_unit = _impl.reflect_unit
reflected_walk = _impl.reflected_walk
scalar_tick_run = _impl.scalar_tick_run

FIFO, VOI_ONLY, CROSS_SENSOR, EST = 0, 1, 2, 3

__all__ = [
    "BACKEND",
    "COMPILED",
    "qkp_objective",
    "qkp_exact",
    "qkp_greedy",
    "qkp_local_search",
    "reflect_unit",
    "reflected_walk",
    "scalar_tick_run",
]
