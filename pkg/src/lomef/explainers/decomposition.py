"""Decompose-then-smooth surrogates.

The series is split into trend + seasonal component(s) + remainder with the
loess/periodic decomposition from the neighbourhood module; exponential
smoothing (non-seasonal candidates) models the seasonally adjusted part, and
forecasts re-add each seasonal component by periodic continuation of its
last cycle.  With one period this is the STL+ETS surrogate, with several the
MSTL+ETS one; with none it degrades gracefully to trend-only adjustment.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..core import as_float_array
from ..neighbourhood import mstl_decompose
from .base import ExplainerKind
from .ets import EtsExplainer

__all__ = ["DecompositionEtsExplainer"]


class DecompositionEtsExplainer(BaseEstimator):
    """Seasonal decomposition with an exponential-smoothing core."""

    def __init__(self, periods: tuple[int, ...] = ()):
        self.periods = periods

    @property
    def kind(self) -> ExplainerKind:
        return (
            ExplainerKind.STL_ETS
            if len(tuple(self.periods)) == 1
            else ExplainerKind.MSTL_ETS
        )

    def fit(self, values) -> "DecompositionEtsExplainer":
        y = as_float_array(values)
        comp = mstl_decompose(y, tuple(self.periods))
        self.components_ = comp
        self.ets_ = EtsExplainer(seasonal_period=None).fit(comp.seasonally_adjusted)
        self.n_obs_ = y.shape[0]
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        out = self.ets_.forecast(horizon)
        # Each extracted seasonal component is exactly periodic, so its
        # continuation is read off by phase.
        future = self.n_obs_ + np.arange(horizon)
        for period, component in zip(
            self.components_.periods, self.components_.seasonal
        ):
            out = out + component[future % period]
        return out
