"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when
``APPROXCONVEX_PURE_PYTHON=1``) the numpy fallback is used. Both expose
``convex_triples`` and ``simplex_iterate`` with identical semantics.
"""
import os

from . import _pykernels

OPTIMAL = _pykernels.OPTIMAL
UNBOUNDED = _pykernels.UNBOUNDED
ITERATION_CAP = _pykernels.ITERATION_CAP

_compiled = None
if os.environ.get("APPROXCONVEX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_active = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    return _active if name is None else BACKENDS[name]


def convex_triples(*args, backend=None):
    return get_backend(backend).convex_triples(*args)


def simplex_iterate(*args, backend=None):
    return get_backend(backend).simplex_iterate(*args)
