"""Selection of the row-refinement kernel backend.

The compiled extension is preferred when it imported cleanly; otherwise the
NumPy implementation takes over transparently. SPARSESWAPS_BACKEND
("compiled" or "python") forces a choice, mainly for the backend benchmark
and for tests.
"""

import os

from . import _kernels_py

_BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None
else:
    _BACKENDS["compiled"] = _compiled

ENV_BACKEND = "SPARSESWAPS_BACKEND"


def available_backends():
    return sorted(_BACKENDS)


def get_kernel(backend=None):
    """Resolve a kernel module by name, env var, or preference order."""
    if backend is None:
        backend = os.environ.get(ENV_BACKEND)
    if backend is None:
        return _compiled if _compiled is not None else _kernels_py
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {backend!r}; available: {available_backends()}"
        ) from None


def active_backend(backend=None) -> str:
    return get_kernel(backend).BACKEND_NAME
