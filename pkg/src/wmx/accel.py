"""Numba acceleration glue.

The hot kernels in :mod:`wmx.kernels` come in two flavours: a plain numpy
implementation and an explicit-loop version compiled with numba. This module
decides which one the package uses. Compilation is skipped when numba is not
importable or when the ``WMX_DISABLE_NUMBA`` environment variable is set to a
truthy value, so the pure-numpy path stays available for debugging and for
the benchmark in ``benchmarks/bench_kernels.py``.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    numba = None
    HAS_NUMBA = False

_TRUTHY = ("1", "true", "yes", "on")


def _disabled_by_env() -> bool:
    return os.environ.get("WMX_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


JIT_ENABLED = HAS_NUMBA and not _disabled_by_env()


def maybe_jit(*args, **kwargs):
    """numba.njit when the JIT is enabled, identity decorator otherwise."""
    if not JIT_ENABLED:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if args and callable(args[0]):
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if JIT_ENABLED else "numpy"
