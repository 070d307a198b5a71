"""Backend selection for the hot training loops.

Two interchangeable implementations exist for every kernel in
``fairguide.kernels``: a numba ``@njit`` version and a vectorized
pure-numpy twin. Which one runs is decided once, at import time, from
the ``FAIRGUIDE_BACKEND`` environment variable:

    auto   (default)  use numba when importable, else numpy
    numba             require numba, fail loudly if missing
    numpy             force the pure-numpy path

``benchmarks/bench_backends.py`` times both paths side by side.
"""

import os

_VALID = ("auto", "numba", "numpy")


def _requested() -> str:
    value = os.environ.get("FAIRGUIDE_BACKEND", "auto").lower()
    if value not in _VALID:
        raise ValueError(
            f"FAIRGUIDE_BACKEND={value!r}: expected one of {_VALID}"
        )
    return value


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def select_backend() -> str:
    """Resolve the active backend name ("numba" or "numpy")."""
    mode = _requested()
    if mode == "numpy":
        return "numpy"
    if mode == "numba":
        if not _numba_available():
            raise ImportError(
                "FAIRGUIDE_BACKEND=numba but numba is not importable"
            )
        return "numba"
    return "numba" if _numba_available() else "numpy"


ACTIVE_BACKEND = select_backend()
