"""Numba toggle for the hot kernels.

The ODE shooting loops and the scalar flux inversion dominate runtime, so
they are compiled with numba by default.  Setting the environment variable
``DOUBLEPHASE_NUMBA=0`` before import selects the pure-Python/numpy fallback:
the same source runs undecorated, which keeps both paths numerically
identical (no fastmath, same operation order).  ``benchmarks/bench_kernels.py``
times the two paths against each other.
"""

from __future__ import annotations

import os

__all__ = ["NUMBA_ENABLED", "maybe_njit"]


def _flag_enabled() -> bool:
    raw = os.environ.get("DOUBLEPHASE_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "off", "no")


NUMBA_ENABLED = _flag_enabled()

if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        NUMBA_ENABLED = False

if NUMBA_ENABLED:

    def maybe_njit(*args, **kwargs):
        return _njit(*args, **kwargs)

else:

    def maybe_njit(*args, **kwargs):
        # identity decorator: plain-Python execution of the same kernel source
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap
