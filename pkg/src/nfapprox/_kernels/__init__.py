"""Hot loops with two interchangeable backends.

The numba backend is used when numba imports and ``NFAPPROX_DISABLE_NUMBA``
is unset (or ``0``). Setting the variable to ``1`` selects the vectorised
numpy fallback. Both backends return identical results on the inputs the
package feeds them; ``tests/test_kernels.py`` checks this.
"""
from __future__ import annotations

import contextlib
import logging
import os

from . import _numpy

log = logging.getLogger(__name__)

try:
    from . import _numba
except ImportError:  # numba missing or broken
    _numba = None

_DISABLED = os.environ.get("NFAPPROX_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
_backend = "numba" if (_numba is not None and not _DISABLED) else "numpy"

KERNELS = ("box_filter", "lattice_scan", "coprime_pair_sum")


def available_backends() -> list[str]:
    return ["numba", "numpy"] if _numba is not None else ["numpy"]


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _backend = name


@contextlib.contextmanager
def backend(name: str):
    prev = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _impl():
    return _numba if _backend == "numba" else _numpy


def box_filter(lo, hi, mr, dim_place, n_places, limit_sq):
    return _impl().box_filter(lo, hi, mr, dim_place, n_places, limit_sq)


def lattice_scan(q_real, log_qsize, theta_real, mr, minv, dim_place, a, log_c, cap):
    return _impl().lattice_scan(q_real, log_qsize, theta_real, mr, minv, dim_place, a, log_c, cap)


def coprime_pair_sum(norms, s):
    return _impl().coprime_pair_sum(norms, s)
