"""Classical additive decomposition helpers (moving-average detrending).

Used for explainer initial states and the theta method's seasonal
adjustment.  Not to be confused with the loess-based decomposition in the
neighbourhood module — this is the textbook moving-average variant.
"""

from __future__ import annotations

import numpy as np

__all__ = ["centered_moving_average", "classical_seasonal"]


def centered_moving_average(y: np.ndarray, m: int) -> np.ndarray:
    """Centred MA(m); NaN where the window does not fit.

    Even periods use the standard 2xMA (half weights on the endpoints) so
    the window stays centred.
    """
    n = y.shape[0]
    out = np.full(n, np.nan)
    if m % 2 == 1:
        half = m // 2
        if n >= m:
            kernel = np.full(m, 1.0 / m)
            out[half : n - half] = np.convolve(y, kernel, mode="valid")
    else:
        half = m // 2
        if n >= m + 1:
            kernel = np.full(m + 1, 1.0 / m)
            kernel[0] = kernel[-1] = 0.5 / m
            out[half : n - half] = np.convolve(y, kernel, mode="valid")
    return out


def classical_seasonal(y: np.ndarray, m: int) -> np.ndarray:
    """Length-m additive seasonal indices, centred to sum to zero.

    Detrends by centred moving average and averages the detrended values by
    phase, ignoring the edge positions where the trend is undefined.  Falls
    back to raw phase means (of the mean-removed series) when the series is
    too short for the moving average.
    """
    detrended = y - centered_moving_average(y, m)
    if np.all(np.isnan(detrended)):
        detrended = y - y.mean()
    indices = np.empty(m)
    for phase in range(m):
        vals = detrended[phase::m]
        vals = vals[~np.isnan(vals)]
        indices[phase] = vals.mean() if vals.size else 0.0
    return indices - indices.mean()
