"""Savitzky-Golay smoothing along the vertical (delta) axis of an image.

The filter fits a low-order polynomial in a sliding window and evaluates it
at the window center, which for interior points reduces to a fixed
convolution. Near the edges the window is truncated to the available samples
and the polynomial is refit there, so edge rows are smoothed rather than
extrapolated.
"""

from __future__ import annotations

import numpy as np

from .image import SpectralImage


def _fit_row(offsets: np.ndarray, order: int) -> np.ndarray:
    """Least-squares coefficients evaluating the window polynomial at offset 0."""
    order = min(order, offsets.size - 1)
    design = np.vander(offsets, order + 1, increasing=True)
    # value at 0 is the constant term of the fitted polynomial
    return np.linalg.pinv(design)[0]


def savgol_matrix(length: int, window: int, poly_order: int) -> np.ndarray:
    """Dense (length, length) smoothing operator for one column."""
    if window % 2 == 0 or window < 3:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if poly_order < 0 or poly_order >= window:
        raise ValueError(f"poly_order must satisfy 0 <= order < window, got {poly_order}")
    if window >= length:
        raise ValueError(f"window {window} must be smaller than column length {length}")

    half = window // 2
    matrix = np.zeros((length, length))
    interior = _fit_row(np.arange(-half, half + 1, dtype=float), poly_order)
    for i in range(length):
        lo = max(0, i - half)
        hi = min(length, i + half + 1)
        if hi - lo == window:
            matrix[i, lo:hi] = interior
        else:
            matrix[i, lo:hi] = _fit_row(np.arange(lo - i, hi - i, dtype=float), poly_order)
    return matrix


def smooth_array(data: np.ndarray, window: int, poly_order: int) -> np.ndarray:
    """Smooth each column of a 2-D array (or a single 1-D column)."""
    data = np.asarray(data, dtype=float)
    squeeze = data.ndim == 1
    if squeeze:
        data = data[:, None]
    out = savgol_matrix(data.shape[0], window, poly_order) @ data
    return out[:, 0] if squeeze else out


def smooth_columns(img: SpectralImage, window: int, poly_order: int) -> SpectralImage:
    """Savitzky-Golay filter applied along the vertical axis; axes unchanged."""
    return SpectralImage(img.x_axis, img.y_axis,
                         smooth_array(img.data, window, poly_order), mask=img.mask)
