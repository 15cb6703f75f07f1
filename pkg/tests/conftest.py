"""Shared helpers: independent dense expansions and synthetic inputs.

``dense_of`` rebuilds a dense matrix straight from the CSR triplet arrays,
so operator tests never go through the library's own ``to_dense``.
"""

import numpy as np
import pytest

from flexsolve import (
    GridDims,
    Problem,
    make_data_term,
    make_gradient_term,
    make_labeling_term,
    make_optical_flow_term,
    vectorize,
)


def dense_of(op) -> np.ndarray:
    """Dense expansion from raw triplets, independent of library code."""
    out = np.zeros((op.rows, op.cols))
    offsets = np.asarray(op.row_offsets)
    cols = np.asarray(op.col_indices)
    vals = np.asarray(op.values)
    for r in range(op.rows):
        for k in range(offsets[r], offsets[r + 1]):
            out[r, cols[k]] += vals[k]
    return out


def seq_matvec(dense: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-by-row product accumulating nonzeros left to right, the same
    reduction order the CSR kernel uses."""
    out = np.zeros(dense.shape[0])
    for r in range(dense.shape[0]):
        acc = 0.0
        row = dense[r]
        for c in np.nonzero(row)[0]:
            acc += row[c] * x[c]
        out[r] = acc
    return out


def noisy_blocks(n: int, seed: int = 1) -> np.ndarray:
    """Piecewise constant blocks plus noise, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    img = 0.25 + 0.5 * (rng.random((n, n)) > 0.5)
    half = n // 2
    img[:half, :half] = 0.2
    img[half:, half:] = 0.8
    img += 0.08 * rng.standard_normal((n, n))
    return np.clip(img, 0.0, 1.0)


def _ramp_profile(n: int) -> np.ndarray:
    # flat lead-in, linear rise, flat tail; the tail keeps the trailing
    # difference rows at zero so a uniform unit shift has zero data cost
    lead, rise = 3, max(4, n // 2)
    prof = np.zeros(n + 1)
    for i in range(n + 1):
        t = min(max(i - lead, 0), rise)
        prof[i] = t / rise
    return prof


def ramp_frames(n: int):
    """Frame pair where the content moves one pixel along axis 0."""
    prof = _ramp_profile(n)
    f1 = np.tile(prof[1 : n + 1], (n, 1)).T
    f2 = np.tile(prof[0:n], (n, 1)).T
    return f1, f2


def three_regions(n: int):
    """Three vertical bands at the exact label values 0, 0.5 and 1."""
    img = np.zeros((n, n))
    img[:, n // 3 : 2 * n // 3] = 0.5
    img[:, 2 * n // 3 :] = 1.0
    labels = np.array([0.0, 0.5, 1.0])
    truth = np.zeros((n, n), dtype=int)
    truth[:, n // 3 : 2 * n // 3] = 1
    truth[:, 2 * n // 3 :] = 2
    return img, labels, truth


def rof_problem(f: np.ndarray, alpha: float):
    dims = GridDims(f.shape)
    p = Problem()
    u = p.add_primal_var(dims)
    p.add_term(make_data_term("l2", 1.0, vectorize(f, dims)), u)
    p.add_term(make_gradient_term("l1-iso", alpha, dims), u)
    return p, u


def flow_problem(f1: np.ndarray, f2: np.ndarray, alpha: float):
    dims = GridDims(f1.shape)
    p = Problem()
    v1 = p.add_primal_var(dims)
    v2 = p.add_primal_var(dims)
    p.add_term(
        make_optical_flow_term(
            "l1", 1.0, vectorize(f1, dims), vectorize(f2, dims), dims
        ),
        (v1, v2),
    )
    p.add_term(make_gradient_term("l1-iso", alpha, dims), v1)
    p.add_term(make_gradient_term("l1-iso", alpha, dims), v2)
    return p, (v1, v2)


def segment_problem(f: np.ndarray, labels, alpha: float):
    dims = GridDims(f.shape)
    p = Problem()
    k = len(labels)
    vs = [p.add_primal_var(dims) for _ in range(k)]
    p.add_term(make_labeling_term(1.0, vectorize(f, dims), labels, dims), vs)
    for v in vs:
        p.add_term(make_gradient_term("l1-iso", alpha, dims), v)
    return p, vs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
