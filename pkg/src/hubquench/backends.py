"""Kernel backend selection.

The Fock-space assembly kernels (many-body Hamiltonian fill) exist in two
equivalent implementations: a numba ``@njit`` version and a vectorized pure
numpy version. The active one is chosen once at import time from the
``HUBQUENCH_BACKEND`` environment variable:

* ``auto`` (default) - numba when importable, numpy otherwise
* ``numba``          - require numba, raise if missing
* ``numpy``          - force the pure numpy path

``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

ENV_VAR = "HUBQUENCH_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def _resolve() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice not in _CHOICES:
        raise ValueError(
            f"{ENV_VAR} must be one of {_CHOICES}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
