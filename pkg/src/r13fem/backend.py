"""Assembly backend selection: numba-jitted kernels or pure numpy.

The env var R13FEM_BACKEND ("numba" or "numpy") picks the path; default is
numba when importable, else numpy.  R13FEM_THREADS caps the numba thread
pool.  Both backends produce the same matrices up to summation order.
"""

import os

try:
    import numba

    HAS_NUMBA = True
    threads = os.environ.get("R13FEM_THREADS")
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


def default_backend():
    choice = os.environ.get("R13FEM_BACKEND", "").strip().lower()
    if choice:
        if choice not in ("numba", "numpy"):
            raise ValueError(f"R13FEM_BACKEND must be 'numba' or 'numpy', got {choice!r}")
        if choice == "numba" and not HAS_NUMBA:
            raise RuntimeError("R13FEM_BACKEND=numba but numba is not importable")
        return choice
    return "numba" if HAS_NUMBA else "numpy"
