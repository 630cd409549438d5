"""Backend selection for the hot loops.

The compiled extension ``_kernels`` is used when it imports; otherwise the
pure-Python ``_pykernels`` stand in. Setting ``SEMIBIF_PURE_PYTHON=1``
forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

_CODES = {"constant": 0, "linear": 1, "exponential": 2, "arrhenius": 3}

compiled = None
if os.environ.get("SEMIBIF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else _pykernels
BACKEND_NAME = "cython" if compiled is not None else "python"


def get_backend(name=None):
    """Return the kernel module by name (``cython``/``python``) or the default."""
    if name is None:
        return backend
    if name == "python":
        return _pykernels
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def encode(f):
    """Flatten a Nonlinearity into (code, value, eps, bumps) for the kernels."""
    root = f.root
    rows = [(b.m, b.width, b.amplitude, b.rise) for b in f.bumps]
    bumps = np.ascontiguousarray(np.array(rows, dtype=float).reshape(len(rows), 4))
    return _CODES[root.kind], float(root.value), float(root.eps), bumps
