"""Vectorized grids and the shared sparse operator kernel.

Values on a cartesian grid with extents ``N1 x ... x Nd`` are flattened with
the first index varying fastest: entry ``(i1, i2, i3)`` lands at flat
position ``i1 + N1*i2 + N1*N2*i3``.  Every linear operator is stored as a
CSR matrix together with a materialized transpose, because the saddle-point
iteration applies forward and adjoint products equally often.

Construction canonicalizes storage: duplicate entries are summed, exact
zeros are pruned and column indices are sorted within each row.  Row and
column absolute sums therefore reflect the true stencil weights, which the
solver relies on for its diagonal step-size preconditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GridDims",
    "SparseOp",
    "vectorize",
    "devectorize",
    "kron",
    "vstack",
    "hstack",
]

_INT64_MAX = int(np.iinfo(np.int64).max)


@dataclass(frozen=True)
class GridDims:
    """Extents of a cartesian grid; the flattened length is their product."""

    extents: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if len(ext) == 0:
            raise ValueError("grid must have at least one axis")
        if any(e < 1 for e in ext):
            raise ValueError(f"grid extents must be positive, got {ext}")
        object.__setattr__(self, "extents", ext)

    @classmethod
    def of(cls, *extents: int) -> "GridDims":
        return cls(tuple(extents))

    @property
    def ndim(self) -> int:
        return len(self.extents)

    @property
    def n(self) -> int:
        out = 1
        for e in self.extents:
            out *= e
        return out


def as_dims(dims) -> GridDims:
    """Coerce a GridDims, a shape tuple, or a bare int to GridDims."""
    if isinstance(dims, GridDims):
        return dims
    if isinstance(dims, (int, np.integer)):
        return GridDims((int(dims),))
    return GridDims(tuple(dims))


def vectorize(grid_data, dims: GridDims) -> np.ndarray:
    """Flatten grid data with the first index varying fastest."""
    dims = as_dims(dims)
    a = np.asarray(grid_data, dtype=np.float64)
    if a.shape != dims.extents:
        raise ValueError(
            f"array of shape {a.shape} does not match grid extents {dims.extents}"
        )
    return a.ravel(order="F")


def devectorize(vec, dims: GridDims) -> np.ndarray:
    """Undo :func:`vectorize`; the round trip is bit-exact."""
    dims = as_dims(dims)
    v = np.asarray(vec, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dims.n:
        raise ValueError(
            f"vector of shape {v.shape} does not match grid length {dims.n}"
        )
    return v.reshape(dims.extents, order="F")


def _frozen_view(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


class SparseOp:
    """Immutable sparse matrix in canonical CSR form.

    The transpose is built once at construction, so adjoint products run on
    the same kernel as forward ones.  Storage arrays are exposed read-only.
    """

    __slots__ = ("_fwd", "_adj")

    def __init__(self, matrix):
        fwd = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        fwd.sum_duplicates()
        fwd.eliminate_zeros()
        fwd.sort_indices()
        adj = fwd.transpose().tocsr()
        adj.sum_duplicates()
        adj.eliminate_zeros()
        adj.sort_indices()
        self._fwd = fwd
        self._adj = adj

    @classmethod
    def _wrap(cls, fwd: sp.csr_matrix, adj: sp.csr_matrix) -> "SparseOp":
        op = object.__new__(cls)
        op._fwd = fwd
        op._adj = adj
        return op

    @classmethod
    def from_triplets(cls, rows: int, cols: int, i, j, values) -> "SparseOp":
        """Build from coordinate triplets; duplicates are summed."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        v = np.asarray(values, dtype=np.float64)
        if not (i.shape == j.shape == v.shape) or i.ndim != 1:
            raise ValueError("triplet arrays must be 1-d and of equal length")
        if rows < 0 or cols < 0:
            raise ValueError("matrix extents must be nonnegative")
        if i.size and (i.min() < 0 or i.max() >= rows):
            raise ValueError(f"row index out of range for {rows} rows")
        if j.size and (j.min() < 0 or j.max() >= cols):
            raise ValueError(f"column index out of range for {cols} columns")
        coo = sp.coo_matrix((v, (i, j)), shape=(rows, cols))
        return cls(coo)

    @classmethod
    def from_dense(cls, array) -> "SparseOp":
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("dense input must be 2-d")
        return cls(a)

    @property
    def rows(self) -> int:
        return self._fwd.shape[0]

    @property
    def cols(self) -> int:
        return self._fwd.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._fwd.shape

    @property
    def nnz(self) -> int:
        return self._fwd.nnz

    @property
    def row_offsets(self) -> np.ndarray:
        return _frozen_view(self._fwd.indptr)

    @property
    def col_indices(self) -> np.ndarray:
        return _frozen_view(self._fwd.indices)

    @property
    def values(self) -> np.ndarray:
        return _frozen_view(self._fwd.data)

    def apply(self, x) -> np.ndarray:
        """Forward product ``A @ x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.cols:
            raise ValueError(
                f"operand of shape {x.shape} does not match {self.cols} columns"
            )
        return self._fwd @ x

    def apply_adjoint(self, y) -> np.ndarray:
        """Adjoint product ``A.T @ y`` on the materialized transpose."""
        y = np.asarray(y, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != self.rows:
            raise ValueError(
                f"operand of shape {y.shape} does not match {self.rows} rows"
            )
        return self._adj @ y

    def row_abs_sums(self) -> np.ndarray:
        """Per-row sums of absolute values (zeros for empty rows)."""
        m = sp.csr_matrix(
            (np.abs(self._fwd.data), self._fwd.indices, self._fwd.indptr),
            shape=self._fwd.shape,
        )
        return m @ np.ones(self.cols)

    def col_abs_sums(self) -> np.ndarray:
        """Per-column sums of absolute values (zeros for empty columns)."""
        m = sp.csr_matrix(
            (np.abs(self._adj.data), self._adj.indices, self._adj.indptr),
            shape=self._adj.shape,
        )
        return m @ np.ones(self.rows)

    def transpose(self) -> "SparseOp":
        """Transposed view; shares storage with this operator."""
        return SparseOp._wrap(self._adj, self._fwd)

    def scaled(self, factor: float) -> "SparseOp":
        return SparseOp(self._fwd * float(factor))

    def __neg__(self) -> "SparseOp":
        return self.scaled(-1.0)

    def to_dense(self) -> np.ndarray:
        return self._fwd.toarray()

    def __repr__(self) -> str:
        return f"SparseOp({self.rows}x{self.cols}, nnz={self.nnz})"


def kron(a: SparseOp, b: SparseOp) -> SparseOp:
    """Kronecker product; refuses results beyond the index range."""
    if (
        a.rows * b.rows > _INT64_MAX
        or a.cols * b.cols > _INT64_MAX
        or a.nnz * b.nnz > _INT64_MAX
    ):
        raise ValueError("kron result exceeds index capacity")
    return SparseOp(sp.kron(a._fwd, b._fwd, format="csr"))


def vstack(blocks) -> SparseOp:
    """Stack operators vertically; column counts must agree."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("vstack needs at least one block")
    cols = blocks[0].cols
    for k, b in enumerate(blocks):
        if b.cols != cols:
            raise ValueError(
                f"block {k} has {b.cols} columns, expected {cols}"
            )
    if len(blocks) == 1:
        return blocks[0]
    return SparseOp(sp.vstack([b._fwd for b in blocks], format="csr"))


def hstack(blocks) -> SparseOp:
    """Stack operators horizontally; row counts must agree."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("hstack needs at least one block")
    rows = blocks[0].rows
    for k, b in enumerate(blocks):
        if b.rows != rows:
            raise ValueError(f"block {k} has {b.rows} rows, expected {rows}")
    if len(blocks) == 1:
        return blocks[0]
    return SparseOp(sp.hstack([b._fwd for b in blocks], format="csr"))
