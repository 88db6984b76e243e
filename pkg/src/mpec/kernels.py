"""Kernel selection: compiled extension if importable, else the numpy fallback.

Set ``MPEC_PURE_PYTHON=1`` to force the fallback, or call :func:`use`.
"""

import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "python"
cnot_layer = _pykernels.cnot_layer
xor_scatter = _pykernels.xor_scatter
match_batch = _pykernels.match_batch


def available() -> list:
    return ["python"] + (["cython"] if _compiled is not None else [])


def use(backend: str) -> str:
    """Switch the module-level kernels; returns the previous backend."""
    global BACKEND, cnot_layer, xor_scatter, match_batch
    if backend not in available():
        raise ValueError(f"backend {backend!r} not available; have {available()}")
    impl = _compiled if backend == "cython" else _pykernels
    prev = BACKEND
    BACKEND = backend
    cnot_layer, xor_scatter, match_batch = impl.cnot_layer, impl.xor_scatter, impl.match_batch
    return prev


if _compiled is not None and os.environ.get("MPEC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    use("cython")
