"""Theta-method surrogate: simple exponential smoothing plus half-slope drift.

The forecast is SES on the (optionally seasonally adjusted) series with an
added drift of exactly half the slope of an ordinary least-squares line fit
to the same series.  Seasonality is handled classically: if the
autocorrelation at the seasonal lag exceeds 1.645 / sqrt(T), additive
seasonal indices are removed before fitting and re-added to the forecast.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from ..core import as_float_array
from ..exceptions import SeriesTooShort
from ._classical import classical_seasonal
from ._ets_kernel import ets_run
from .base import ExplainerKind

__all__ = ["ThetaExplainer"]

_NO_SEASONAL = np.zeros(1)


def _ses_sse(y: np.ndarray, alpha: float, l0: float) -> tuple[float, float]:
    """SSE of one-step SES errors and the final level."""
    sse, level, _, _ = ets_run(
        y, 1, False, False, False, alpha, 0.0, 0.0, 1.0, l0, 0.0, _NO_SEASONAL
    )
    return sse, level


class ThetaExplainer(BaseEstimator):
    """SES-with-drift surrogate (the classic two-theta-line combination)."""

    kind = ExplainerKind.THETA

    def __init__(self, seasonal_period: int | None = None):
        self.seasonal_period = seasonal_period

    def fit(self, values) -> "ThetaExplainer":
        y = as_float_array(values)
        n = y.shape[0]
        if n < 4:
            raise SeriesTooShort(f"theta needs at least 4 points, got {n}")

        period = self.seasonal_period
        self.seasonal_indices_ = None
        adjusted = y
        if period is not None and 2 <= period and n >= 2 * period:
            if self._seasonality_test(y, period):
                indices = classical_seasonal(y, period)
                adjusted = y - np.tile(indices, n // period + 1)[:n]
                self.seasonal_indices_ = indices

        t = np.arange(1, n + 1, dtype=float)
        slope = np.polyfit(t, adjusted, 1)[0]
        self.drift_ = 0.5 * float(slope)

        l0 = float(adjusted[0])
        result = minimize(
            lambda theta: _ses_sse(
                adjusted, 1.0 / (1.0 + np.exp(-theta[0])), l0
            )[0],
            np.array([0.0]),
            method="Nelder-Mead",
            options={"maxiter": 500, "fatol": 1e-8, "xatol": 1e-6},
        )
        self.alpha_ = float(1.0 / (1.0 + np.exp(-result.x[0])))
        _, self.level_ = _ses_sse(adjusted, self.alpha_, l0)
        self.n_obs_ = n
        return self

    @staticmethod
    def _seasonality_test(y: np.ndarray, period: int) -> bool:
        centred = y - y.mean()
        denom = float(centred @ centred)
        if denom == 0.0:
            return False
        r = float(centred[period:] @ centred[:-period]) / denom
        return r > 1.645 / np.sqrt(y.shape[0])

    def forecast(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        steps = np.arange(1, horizon + 1, dtype=float)
        out = self.level_ + self.drift_ * steps
        if self.seasonal_indices_ is not None:
            m = self.seasonal_indices_.shape[0]
            phases = (self.n_obs_ + np.arange(horizon)) % m
            out = out + self.seasonal_indices_[phases]
        return out
