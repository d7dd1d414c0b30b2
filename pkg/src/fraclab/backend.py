"""Numba/numpy backend selection for the hot convolution kernels.

The package ships every O(N^2) inner loop twice: a numba ``@njit`` version
and a pure-numpy version.  Which one runs is controlled by the environment
variable ``FRACLAB_BACKEND``:

* ``auto`` (default) -- numba if it imports, numpy otherwise
* ``numba``          -- require numba, raise if unavailable
* ``numpy``          -- force the pure-numpy path

The choice can also be flipped at runtime with :func:`select`, which the
test suite and ``benchmarks/backend_compare.py`` use to time both paths.
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")

try:
    import numba as _numba
    from numba import njit as _numba_njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    _numba = None
    _numba_njit = None
    _HAVE_NUMBA = False

_requested = os.environ.get("FRACLAB_BACKEND", "auto").strip().lower()
if _requested not in _VALID:
    raise RuntimeError(
        f"FRACLAB_BACKEND must be one of {_VALID}, got {_requested!r}"
    )
if _requested == "numba" and not _HAVE_NUMBA:
    raise RuntimeError("FRACLAB_BACKEND=numba but numba is not importable")

_active = "numpy" if (_requested == "numpy" or not _HAVE_NUMBA) else "numba"


def active_backend() -> str:
    """Name of the backend currently in use ('numba' or 'numpy')."""
    return _active


def use_numba() -> bool:
    return _active == "numba"


def select(name: str) -> str:
    """Switch backend at runtime. Returns the previously active name."""
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    previous = _active
    _active = name
    return previous


def njit(*args, **kwargs):
    """numba.njit when available, identity decorator otherwise.

    Decorated functions are always compiled eagerly-lazily by numba on first
    call; the numpy fallback path never calls them when the numpy backend is
    selected, so a missing numba never blocks import.
    """
    if _HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba_njit(*args, **kwargs)

    def _identity(fn):
        return fn

    if args and callable(args[0]):
        return args[0]
    return _identity


def compile_rhs(fn):
    """Try to numba-compile a scalar callable f(t, y) for the fast solver path.

    Returns a numba dispatcher on success, the original callable otherwise.
    Solvers check ``is_dispatcher`` on the result and pick the jitted core
    only when both the backend and the right-hand side are jitted.
    """
    if not use_numba():
        return fn
    try:
        jitted = _numba_njit(cache=False, nogil=True)(fn)
        jitted(0.0, 0.0)  # force compilation; reject non-jittable callables
        return jitted
    except Exception:
        return fn


def is_dispatcher(fn) -> bool:
    if not _HAVE_NUMBA:
        return False
    from numba.core.dispatcher import Dispatcher

    return isinstance(fn, Dispatcher)
