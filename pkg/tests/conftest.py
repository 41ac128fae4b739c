"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from lomef.core import SeriesSet, TimeSeries


def make_series(
    values,
    sid: str = "A",
    periods: tuple[int, ...] = (),
    horizon: int = 1,
    count: bool = False,
) -> TimeSeries:
    return TimeSeries(
        id=sid,
        values=np.asarray(values, dtype=float),
        seasonal_periods=periods,
        horizon=horizon,
        is_count_data=count,
    )


def make_set(*series, name: str = "test") -> SeriesSet:
    return SeriesSet(series=tuple(series), name=name)


def ar1_values(phi: float, n: int, y0: float = 1.0) -> np.ndarray:
    """Noiseless AR(1) recursion y_t = phi * y_{t-1} starting at ``y0``."""
    out = np.empty(n)
    out[0] = y0
    for t in range(1, n):
        out[t] = phi * out[t - 1]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
