"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version.  Setting ``CFLP_DISABLE_NUMBA=1`` in the environment (before
import) selects the numpy versions everywhere.
"""
import os

_flag = os.environ.get("CFLP_DISABLE_NUMBA", "").strip().lower()
NUMBA_ENABLED = _flag not in ("1", "true", "yes", "on")

if NUMBA_ENABLED:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
    "error_model": "numpy",
}


def njit(fn):
    """Compile ``fn`` with the package defaults, or return it untouched."""
    if not NUMBA_ENABLED:
        return fn
    return _numba.njit(**numba_default)(fn)


def pick(nb_impl, np_impl):
    return nb_impl if NUMBA_ENABLED else np_impl


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
