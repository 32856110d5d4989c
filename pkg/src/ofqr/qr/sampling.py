"""Resample a reconstructed image onto the 29x29 module grid."""

from __future__ import annotations

import numpy as np

from ofqr.errors import DegenerateImage, ShapeMismatch
from ofqr.qr.symbol import FULL


def otsu_threshold(values: np.ndarray) -> float:
    """Threshold maximising between-class variance of a 1-D sample.

    The returned value sits midway between the two distinct sample values
    that bracket the optimal split, so ``values < t`` is the dark class.
    """
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0 or v[0] == v[-1]:
        raise DegenerateImage("all cell means are equal; threshold undefined")
    n = v.size
    csum = np.cumsum(v)
    total = csum[-1]
    k = np.arange(1, n)
    # candidate splits only between distinct neighbours
    valid = v[1:] > v[:-1]
    w0 = k / n
    m0 = csum[:-1] / k
    m1 = (total - csum[:-1]) / (n - k)
    between = w0 * (1 - w0) * (m0 - m1) ** 2
    between[~valid] = -np.inf
    i = int(np.argmax(between))
    return 0.5 * (v[i] + v[i + 1])


def cell_means(image: np.ndarray, modules: int = FULL, box=None) -> np.ndarray:
    """Mean of the pixels whose centres fall in each module cell.

    ``box = (top, left, bottom, right)`` gives the object extent in pixel
    coordinates (edges, not centres); by default the image spans the grid.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D image, got shape {img.shape}")
    h, w = img.shape
    top, left, bottom, right = box if box is not None else (0.0, 0.0, float(h), float(w))
    rows = np.floor(((np.arange(h) + 0.5) - top) / (bottom - top) * modules).astype(int)
    cols = np.floor(((np.arange(w) + 0.5) - left) / (right - left) * modules).astype(int)
    rsel = (rows >= 0) & (rows < modules)
    csel = (cols >= 0) & (cols < modules)
    sums = np.zeros((modules, modules))
    counts = np.zeros((modules, modules))
    rr, cc = np.meshgrid(rows[rsel], cols[csel], indexing="ij")
    np.add.at(sums, (rr, cc), img[np.ix_(rsel, csel)])
    np.add.at(counts, (rr, cc), 1.0)
    if np.any(counts == 0):
        raise ShapeMismatch("image resolution leaves some module cells without samples")
    return sums / counts


def sample_grid(image: np.ndarray, modules: int = FULL, box=None) -> np.ndarray:
    """Binarise an image into a module grid; dark (True) below the Otsu threshold."""
    means = cell_means(image, modules, box)
    return means < otsu_threshold(means)
