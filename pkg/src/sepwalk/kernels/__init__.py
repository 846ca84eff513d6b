"""Path-simulation kernels.

Two interchangeable backends produce bit-identical output: ``numba``
(compiled, parallel over paths) and ``numpy`` (vectorized over the active
paths, no compilation).  ``SEP_WALK_BACKEND`` picks one; the default is
numba when it can be imported.  ``SEP_WALK_THREADS`` caps numba's thread
count.

Randomness is counter based: every uniform is a SplitMix64 hash of
``(seed, path, counter)``, so results do not depend on thread scheduling or
on the backend.
"""

from __future__ import annotations

import importlib
import os

STATUS_STOPPED = 0
STATUS_CENSORED = 1
STATUS_HORIZON = 2

BACKENDS = ("numba", "numpy")

# prefer OpenMP over TBB: older TBB builds only produce a warning and are skipped
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name(name: str | None = None) -> str:
    name = (name or os.environ.get("SEP_WALK_BACKEND") or "").strip().lower()
    if not name:
        return "numba" if numba_available() else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if name == "numba" and not numba_available():
        raise ImportError("SEP_WALK_BACKEND=numba but numba is not installed")
    return name


def get_backend(name: str | None = None):
    """Module exposing ``markov_paths`` and ``ay_paths`` for the chosen backend."""
    name = backend_name(name)
    module = importlib.import_module(f".{name}_kernels", __name__)
    if name == "numba":
        threads = os.environ.get("SEP_WALK_THREADS")
        if threads:
            import numba
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return module
