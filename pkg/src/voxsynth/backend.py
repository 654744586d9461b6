"""Kernel backend selection.

The default backend compiles the hot loops with numba. Setting
``VOXSYNTH_DISABLE_JIT=1`` (or any of "true"/"yes") selects the
pure-numpy twin, which is also the automatic fallback when numba cannot
be imported. ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

_TRUTHY = ("1", "true", "yes", "on")


def jit_disabled() -> bool:
    return os.environ.get("VOXSYNTH_DISABLE_JIT", "").lower() in _TRUTHY


if jit_disabled():
    from . import _kernels_numpy as kernels
else:
    try:
        from . import _kernels_numba as kernels  # noqa: F401
    except ImportError:
        from . import _kernels_numpy as kernels  # noqa: F401
