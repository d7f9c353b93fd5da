"""Select the activation kernel at import time.

The compiled extension is used when it is importable; setting
``PLSAGENT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _pykernel

python_step = _pykernel.step
python_frontier = _pykernel.frontier

try:
    if os.environ.get("PLSAGENT_PURE_PYTHON") == "1":
        raise ImportError("pure-Python kernel requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

if _ckernel is not None:
    BACKEND = "cython"
    step = _ckernel.step
    frontier = _ckernel.frontier
else:
    BACKEND = "python"
    step = python_step
    frontier = python_frontier


def get(backend=None):
    """Return ``(step, frontier)`` for ``backend`` ('cython', 'python' or None
    for the import-time default)."""
    if backend is None:
        return step, frontier
    if backend == "python":
        return python_step, python_frontier
    if backend == "cython":
        if _ckernel is None:
            raise ImportError("compiled kernel is not available")
        return _ckernel.step, _ckernel.frontier
    raise ValueError(f"unknown backend {backend!r}")
