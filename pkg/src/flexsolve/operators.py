"""Finite-difference and pointwise operator builders.

All difference stencils are forward differences on a unit-spacing grid with
a zero row at the trailing boundary of each axis.  That choice keeps
constants in the kernel of every difference operator and makes the negated
transpose of the gradient an exact discrete divergence.  Axis 0 is the
fastest-varying index of the flattening convention in :mod:`.linalg`, so
the 1-d stencil acts with stride ``N1 * ... * N_axis`` in flat indexing.

Grids with more than three axes are not supported by these builders.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .linalg import GridDims, SparseOp, as_dims, hstack, vstack

__all__ = [
    "build_identity",
    "build_diagonal",
    "build_partial",
    "build_gradient",
    "build_divergence",
    "build_curl2d",
]

_MAX_NDIM = 3


def build_identity(n: int) -> SparseOp:
    """Identity on ``n`` components."""
    if n < 1:
        raise ValueError(f"identity size must be positive, got {n}")
    return SparseOp(sp.identity(n, format="csr"))


def build_diagonal(diag) -> SparseOp:
    """Diagonal matrix from a vector; exact zeros are not stored."""
    d = np.asarray(diag, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("diagonal must be a nonempty 1-d vector")
    return SparseOp(sp.diags(d).tocsr())


def _forward_difference(n: int) -> sp.csr_matrix:
    # n x n forward difference, zero last row (Neumann boundary).
    if n == 1:
        return sp.csr_matrix((1, 1))
    i = np.arange(n - 1)
    rows = np.concatenate([i, i])
    cols = np.concatenate([i, i + 1])
    vals = np.concatenate([-np.ones(n - 1), np.ones(n - 1)])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _check_dims(dims) -> GridDims:
    dims = as_dims(dims)
    if dims.ndim > _MAX_NDIM:
        raise ValueError(
            f"difference builders support up to {_MAX_NDIM} axes, got {dims.ndim}"
        )
    return dims


def build_partial(dims, axis: int) -> SparseOp:
    """Forward difference along ``axis``, mapping N to N values.

    In flat indexing the stencil pairs each entry with its successor along
    the requested axis; entries on the trailing face of that axis get an
    all-zero row.
    """
    dims = _check_dims(dims)
    if not 0 <= axis < dims.ndim:
        raise ValueError(f"axis {axis} out of range for {dims.ndim}-d grid")
    mats = [sp.identity(e, format="csr") for e in dims.extents]
    mats[axis] = _forward_difference(dims.extents[axis])
    acc = mats[-1]
    for m in reversed(mats[:-1]):
        acc = sp.kron(acc, m, format="csr")
    return SparseOp(acc)


def build_gradient(dims) -> SparseOp:
    """Stack of all axis partials, mapping N to d*N values."""
    dims = _check_dims(dims)
    return vstack([build_partial(dims, a) for a in range(dims.ndim)])


def build_divergence(dims) -> SparseOp:
    """Negated transpose of :func:`build_gradient`, mapping d*N to N."""
    dims = _check_dims(dims)
    if dims.ndim < 2:
        raise ValueError("divergence needs at least a 2-d grid")
    return -build_gradient(dims).transpose()


def build_curl2d(dims) -> SparseOp:
    """Scalar curl of a 2-d vector field: d/dx of the second component
    minus d/dy of the first, with axis 0 playing the role of x."""
    dims = _check_dims(dims)
    if dims.ndim != 2:
        raise ValueError(f"curl is defined for 2-d grids, got {dims.ndim}-d")
    return hstack([-build_partial(dims, 1), build_partial(dims, 0)])
