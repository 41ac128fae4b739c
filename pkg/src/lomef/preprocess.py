"""Preprocessing for global model training and its inversion.

The forward chain applied to every series before a global model sees it:

1. mean scaling — divide the series by its own mean, so series of very
   different levels can share one model;
2. log variance stabilisation — ``log(v)`` when the dataset minimum is
   positive, ``log(v + 1)`` when the dataset contains zeros (the +1 decision
   is made once per dataset, not per series).

:func:`postprocess` inverts the chain for forecasts and optionally applies
the final integer rounding / zero floor for count and non-negative data.

Also here: sliding-window record construction for pooled training and
Fourier term evaluation for seasonality-as-regressors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_float_array
from .exceptions import NegativeValue, NonFiniteForecast, SeriesTooShort, ZeroMean

__all__ = [
    "ScalingRecord",
    "WindowConfig",
    "FourierConfig",
    "mean_scale",
    "log_stabilise",
    "preprocess_series",
    "postprocess",
    "fourier_terms",
    "fourier_names",
    "make_windows",
]

MAX_FOURIER_ORDER = 25


@dataclass(frozen=True)
class ScalingRecord:
    """What was done to one series on the way in, so it can be undone.

    ``mean_factor`` is the series mean divided out (positive for the
    non-negative datasets this pipeline targets); the two flags record
    which branch of the variance stabiliser ran.
    """

    mean_factor: float
    log_applied: bool = False
    plus_one_applied: bool = False


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window geometry: ``n`` lagged inputs predicting ``m`` outputs."""

    n: int
    m: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"window sizes must be >= 1, got n={self.n}, m={self.m}")

    @classmethod
    def for_horizon(cls, horizon: int) -> "WindowConfig":
        """Default geometry: input window 1.5x the forecast horizon."""
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        return cls(n=math.ceil(1.5 * horizon), m=horizon)


@dataclass(frozen=True)
class FourierConfig:
    """Fourier seasonality terms: ``orders[i]`` harmonics for ``periods[i]``."""

    periods: tuple[int, ...]
    orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(int(p) for p in self.periods))
        object.__setattr__(self, "orders", tuple(int(k) for k in self.orders))
        if len(self.periods) != len(self.orders):
            raise ValueError(
                f"got {len(self.periods)} periods but {len(self.orders)} orders"
            )
        for s, k in zip(self.periods, self.orders):
            if not 1 <= k <= MAX_FOURIER_ORDER:
                raise ValueError(f"order {k} outside 1..{MAX_FOURIER_ORDER}")
            if 2 * k > s:
                raise ValueError(f"order {k} too high for period {s} (need 2K <= s)")

    @property
    def n_terms(self) -> int:
        return 2 * sum(self.orders)


def mean_scale(values) -> tuple[np.ndarray, float]:
    """Divide a series by its mean; returns (scaled, mean_factor).

    The scaled series has mean exactly 1 up to rounding.  A zero-mean series
    cannot be scaled and raises :class:`ZeroMean`.
    """
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if mean == 0.0:
        raise ZeroMean("cannot mean-scale a series whose mean is zero")
    return arr / mean, mean


def log_stabilise(values, dataset_min: float) -> tuple[np.ndarray, bool]:
    """Log-transform a (scaled) series; returns (transformed, plus_one_applied).

    The branch is decided by the *dataset* minimum: a dataset that touches
    zero anywhere uses ``log(v + 1)`` for every one of its series, so one
    inverse applies everywhere.  Negative inputs are rejected.
    """
    arr = np.asarray(values, dtype=float)
    if np.any(arr < 0):
        raise NegativeValue("log stabilisation requires non-negative values")
    plus_one = dataset_min == 0.0
    if plus_one:
        return np.log1p(arr), True
    return np.log(arr), False


def preprocess_series(
    values, log_applied: bool, plus_one: bool
) -> tuple[np.ndarray, ScalingRecord]:
    """Full forward chain for one series under dataset-level flags.

    Used by global models both at fit time and on unseen (bootstrapped)
    series.  Values are floored before the log — at 0 in the +1 branch,
    at a tiny positive epsilon otherwise — because resampled series can
    dip slightly below the original data range.
    """
    scaled, factor = mean_scale(values)
    if not log_applied:
        return scaled, ScalingRecord(factor, False, False)
    if plus_one:
        floored = np.maximum(scaled, 0.0)
        return np.log1p(floored), ScalingRecord(factor, True, True)
    floored = np.maximum(scaled, 1e-9)
    return np.log(floored), ScalingRecord(factor, True, False)


def postprocess(
    raw,
    record: ScalingRecord,
    is_count_data: bool = False,
    non_negative: bool = False,
) -> np.ndarray:
    """Invert preprocessing and finalise a forecast, in this order:

    exponential -> subtract 1 (if the +1 branch ran) -> multiply by the
    series mean -> round half away from zero (count data) -> floor at zero
    (non-negative data).  Every step is monotone non-decreasing, so forecast
    ordering survives post-processing.
    """
    arr = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteForecast("forecast contains NaN or infinity")
    if record.log_applied:
        arr = np.exp(arr)
        if record.plus_one_applied:
            arr = arr - 1.0
    arr = arr * record.mean_factor
    if is_count_data:
        arr = np.copysign(np.floor(np.abs(arr) + 0.5), arr)
    if non_negative:
        arr = np.maximum(arr, 0.0)
    return arr


def fourier_terms(t, config: FourierConfig) -> np.ndarray:
    """Evaluate Fourier seasonality terms at time index ``t`` (1-based).

    For each period ``s`` and each harmonic ``k = 1..K``, emits the pair
    ``sin(2 pi k t / s), cos(2 pi k t / s)`` — periods in configured order,
    harmonics innermost.  Scalar ``t`` gives a vector of length ``2 sum(K)``;
    an array of times gives the corresponding matrix (one row per time).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    cols = []
    for s, k_max in zip(config.periods, config.orders):
        for k in range(1, k_max + 1):
            angle = 2.0 * np.pi * k * t_arr / s
            cols.append(np.sin(angle))
            cols.append(np.cos(angle))
    out = np.column_stack(cols)
    return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def fourier_names(config: FourierConfig) -> list[str]:
    """Column names matching :func:`fourier_terms` ordering."""
    names = []
    for s, k_max in zip(config.periods, config.orders):
        for k in range(1, k_max + 1):
            names.append(f"sin_{s}_{k}")
            names.append(f"cos_{s}_{k}")
    return names


def make_windows(values, config: WindowConfig) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate all sliding-window training records, oldest first.

    A series of length T yields exactly ``T - n - m + 1`` records at stride
    1; record i is ``(values[i : i+n], values[i+n : i+n+m])``.  Returned as
    an (R, n) input matrix and (R, m) output matrix.
    """
    arr = as_float_array(values)
    n, m = config.n, config.m
    count = arr.shape[0] - n - m + 1
    if count < 1:
        raise SeriesTooShort(
            f"length {arr.shape[0]} yields no windows for n={n}, m={m}"
        )
    window = np.lib.stride_tricks.sliding_window_view(arr, n + m)[:count]
    return window[:, :n].copy(), window[:, n:].copy()
