"""Light adapters turning matrices, callables, and objects into matvecs.

Solvers, preconditioners, and spectral tools all consume square linear
actions; this module normalizes the accepted shapes (dense array, object
with .matvec or .apply, bare callable) into (n, matvec) pairs.
"""

from __future__ import annotations

import numpy as np


class FunctionOperator:
    """Square linear operator defined by a callable x -> A x."""

    def __init__(self, n, fn):
        self.shape = (n, n)
        self._fn = fn

    def matvec(self, x):
        return self._fn(x)


class MatrixOperator:
    """Dense-matrix operator (keeps the array accessible)."""

    def __init__(self, a):
        self.array = np.asarray(a)
        if self.array.ndim != 2 or self.array.shape[0] != self.array.shape[1]:
            raise ValueError("expected a square matrix")
        self.shape = self.array.shape

    def matvec(self, x):
        return self.array @ x


def as_matvec(obj):
    """Return a callable x -> obj x for any accepted operator shape."""
    if obj is None:
        return lambda x: x
    if isinstance(obj, np.ndarray):
        return MatrixOperator(obj).matvec
    if hasattr(obj, "matvec"):
        return obj.matvec
    if hasattr(obj, "apply"):
        return obj.apply
    if callable(obj):
        return obj
    raise TypeError(f"cannot interpret {type(obj).__name__} as a linear operator")


def operator_size(obj, n=None):
    """Best-effort dimension of a square operator (n overrides)."""
    if n is not None:
        return int(n)
    shape = getattr(obj, "shape", None)
    if shape is not None and len(shape) == 2:
        return int(shape[0])
    raise ValueError("operator dimension not discoverable; pass n explicitly")
