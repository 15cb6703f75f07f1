"""Synthetic inputs shared by the demo scripts."""

import numpy as np


def noisy_blocks(n: int, seed: int = 1) -> np.ndarray:
    """Piecewise constant blocks plus noise, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    img = 0.25 + 0.5 * (rng.random((n, n)) > 0.5)
    half = n // 2
    img[:half, :half] = 0.2
    img[half:, half:] = 0.8
    img += 0.08 * rng.standard_normal((n, n))
    return np.clip(img, 0.0, 1.0)


def ramp_frames(n: int):
    """Frame pair where the content moves one pixel along axis 0."""
    lead, rise = 3, max(4, n // 2)
    prof = np.zeros(n + 1)
    for i in range(n + 1):
        t = min(max(i - lead, 0), rise)
        prof[i] = t / rise
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
