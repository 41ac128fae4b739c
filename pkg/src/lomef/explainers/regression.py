"""Regression-family surrogates: local AR, harmonic regression, pooled AR.

All three share the least-squares core and produce coefficient tables whose
rows are named interpretably (``lag_1`` is the most recent lag; Fourier
columns carry their period and harmonic).  Significance follows the usual
|coefficient| > 2 standard errors rule.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator

from .._linreg import LinearFit, fit_linear, gaussian_aic, gaussian_aicc
from ..core import as_float_array
from ..exceptions import SeriesTooShort
from ..preprocess import FourierConfig, fourier_names, fourier_terms
from .base import CoefficientRow, ExplainerKind

__all__ = ["ArExplainer", "DhrArExplainer", "PooledRegressionExplainer"]


def _lag_design(y: np.ndarray, order: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``[y[t-order], ..., y[t-1]]`` for targets ``y[start:]``."""
    rows = np.lib.stride_tricks.sliding_window_view(y, order)
    return rows[start - order : y.shape[0] - order], y[start:]


def _lag_table(fit: LinearFit, order: int) -> tuple[CoefficientRow, ...]:
    """Coefficient rows in lag order (lag_1 = most recent) plus intercept."""
    rows = []
    for lag in range(1, order + 1):
        value = float(fit.coefficients[order - lag])
        se = float(fit.std_errors[order - lag])
        rows.append(CoefficientRow(f"lag_{lag}", value, se, abs(value) > 2 * se))
    rows.append(
        CoefficientRow(
            "intercept",
            fit.intercept,
            fit.intercept_std_error,
            abs(fit.intercept) > 2 * fit.intercept_std_error,
        )
    )
    return tuple(rows)


class ArExplainer(BaseEstimator):
    """Local autoregression: OLS with intercept, order chosen by AIC.

    Candidate orders 1..max_order are compared on the common sample the
    largest order leaves available; the winner is refitted on its full
    sample.  ``max_order`` defaults to min(10, (T-2)/2) when not given (the
    pipeline passes the global model's input window).
    """

    kind = ExplainerKind.AR

    def __init__(self, max_order: int | None = None):
        self.max_order = max_order

    def fit(self, values) -> "ArExplainer":
        y = as_float_array(values)
        n = y.shape[0]
        if self.max_order is not None and self.max_order + 1 >= n:
            raise SeriesTooShort(
                f"max_order {self.max_order} needs more than "
                f"{self.max_order + 1} points, got {n}"
            )
        cap = (n - 2) // 2
        if cap < 1:
            raise SeriesTooShort(f"cannot fit an autoregression on {n} points")
        p_max = min(self.max_order or 10, cap)

        best_order, best_aic = 1, float("inf")
        for p in range(1, p_max + 1):
            X, target = _lag_design(y, p, p_max)
            fit = fit_linear(X, target, warn=False)
            aic = gaussian_aic(fit.sse, target.shape[0], p + 2)
            if aic < best_aic:
                best_order, best_aic = p, aic

        X, target = _lag_design(y, best_order, best_order)
        self.fit_ = fit_linear(X, target)
        self.order_ = best_order
        self.aic_ = best_aic
        self.coefficient_table_ = _lag_table(self.fit_, best_order)
        self.tail_ = y[-best_order:].copy()
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        p = self.order_
        history = list(self.tail_)
        out = np.empty(horizon)
        for j in range(horizon):
            out[j] = (
                np.dot(history[-p:], self.fit_.coefficients) + self.fit_.intercept
            )
            history.append(out[j])
        return out


class DhrArExplainer(BaseEstimator):
    """Dynamic harmonic regression with autoregressive errors.

    A Fourier regression on deterministic time (harmonics per period chosen
    by AICc over K = 1..k_max, clamped to period/2 with a warning when the
    request exceeds it) plus an AR model on the regression residuals (order
    by AIC over 0..ar_max, 0 meaning no error model).
    """

    kind = ExplainerKind.DHR_AR

    def __init__(
        self,
        periods: tuple[int, ...] = (),
        k_max: int | None = None,
        ar_max: int = 5,
    ):
        self.periods = periods
        self.k_max = k_max
        self.ar_max = ar_max

    def _order_grid(self, n: int) -> list[tuple[int, ...]]:
        periods = tuple(self.periods)
        caps = [min(25, s // 2) for s in periods]
        if self.k_max is not None:
            if any(self.k_max > cap for cap in caps):
                warnings.warn(
                    f"k_max={self.k_max} exceeds period/2 for periods "
                    f"{periods}; clamping",
                    stacklevel=3,
                )
            caps = [min(cap, self.k_max) for cap in caps]
        top = max(caps)
        grid = [
            orders
            for orders in (
                tuple(min(k, cap) for cap in caps) for k in range(1, top + 1)
            )
            if 4 * sum(orders) + 8 <= n
        ]
        if not grid:
            raise SeriesTooShort(
                f"harmonic regression with periods {periods} needs at least "
                f"{4 * len(periods) + 8} points, got {n}"
            )
        return grid

    def fit(self, values) -> "DhrArExplainer":
        y = as_float_array(values)
        n = y.shape[0]
        if n < 8:
            raise SeriesTooShort(f"harmonic regression needs >= 8 points, got {n}")
        t = np.arange(1, n + 1, dtype=float)
        periods = tuple(self.periods)

        if periods:
            best = None
            seen: set[tuple[int, ...]] = set()
            for orders in self._order_grid(n):
                if orders in seen:
                    continue
                seen.add(orders)
                config = FourierConfig(periods, orders)
                X = fourier_terms(t, config)
                fit = fit_linear(X, y, warn=False)
                aicc = gaussian_aicc(fit.sse, n, config.n_terms + 2)
                if best is None or aicc < best[0]:
                    best = (aicc, config, fit)
            self.aicc_, self.fourier_, fit = best
            self.fourier_fit_ = fit
            residuals = y - fit.predict(fourier_terms(t, self.fourier_))
        else:
            self.fourier_ = None
            self.fourier_fit_ = None
            mean = float(y.mean())
            residuals = y - mean
            self.aicc_ = gaussian_aicc(float(residuals @ residuals), n, 2)
            self._mean = mean

        self.ar_order_, self.ar_fit_ = self._fit_error_model(residuals)
        self.residual_tail_ = residuals[-max(self.ar_order_, 1) :].copy()
        self.n_obs_ = n
        self.coefficient_table_ = self._build_table()
        return self

    def _fit_error_model(self, residuals: np.ndarray) -> tuple[int, LinearFit | None]:
        n = residuals.shape[0]
        ar_max = min(self.ar_max, max(n - 2, 0) // 2)
        # order 0 (no error model beyond the residual mean) competes against
        # AR(1..ar_max) on the common sample the largest order can use
        sample = residuals[ar_max:]
        centred = sample - sample.mean()
        best_order, best_fit = 0, None
        best_aic = gaussian_aic(float(centred @ centred), sample.shape[0], 2)
        for p in range(1, ar_max + 1):
            X, target = _lag_design(residuals, p, ar_max)
            fit = fit_linear(X, target, warn=False)
            aic = gaussian_aic(fit.sse, target.shape[0], p + 2)
            if aic < best_aic:
                best_order, best_aic, best_fit = p, aic, fit
        if best_order > 0:
            X, target = _lag_design(residuals, best_order, best_order)
            best_fit = fit_linear(X, target, warn=False)
        return best_order, best_fit

    def _build_table(self) -> tuple[CoefficientRow, ...]:
        rows = []
        if self.fourier_fit_ is not None:
            names = fourier_names(self.fourier_)
            for name, value, se in zip(
                names, self.fourier_fit_.coefficients, self.fourier_fit_.std_errors
            ):
                rows.append(
                    CoefficientRow(name, float(value), float(se), abs(value) > 2 * se)
                )
            rows.append(
                CoefficientRow(
                    "intercept",
                    self.fourier_fit_.intercept,
                    self.fourier_fit_.intercept_std_error,
                    abs(self.fourier_fit_.intercept)
                    > 2 * self.fourier_fit_.intercept_std_error,
                )
            )
        return tuple(rows)

    def forecast(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        t_future = np.arange(self.n_obs_ + 1, self.n_obs_ + horizon + 1, dtype=float)
        if self.fourier_ is not None:
            base = self.fourier_fit_.predict(fourier_terms(t_future, self.fourier_))
        else:
            base = np.full(horizon, self._mean)
        if self.ar_order_ > 0:
            p = self.ar_order_
            history = list(self.residual_tail_)
            for _ in range(horizon):
                history.append(
                    float(
                        np.dot(history[-p:], self.ar_fit_.coefficients)
                        + self.ar_fit_.intercept
                    )
                )
            base = base + np.asarray(history[-horizon:])
        return base

    def first_harmonic(self) -> dict[int, tuple[float, float]]:
        """(sin, cos) coefficient pair of the first harmonic per period."""
        if self.fourier_ is None:
            return {}
        out = {}
        offset = 0
        for s, k_max in zip(self.fourier_.periods, self.fourier_.orders):
            pair = self.fourier_fit_.coefficients[offset : offset + 2]
            out[s] = (float(pair[0]), float(pair[1]))
            offset += 2 * k_max
        return out


class PooledRegressionExplainer(BaseEstimator):
    """One regression pooled over every neighbourhood member's lag windows.

    Unlike the per-member surrogates this fits a *single* model across the
    whole neighbourhood (it needs a bootstrap neighbourhood, N > 1).
    Member forecasts come from rolling the pooled coefficients forward from
    each member's own tail; Fourier features (first harmonic per period)
    join the design only for seasonal series.
    """

    kind = ExplainerKind.PR

    def __init__(self, n_lags: int = 8, fourier: FourierConfig | None = None):
        self.n_lags = n_lags
        self.fourier = fourier

    def fit(self, members) -> "PooledRegressionExplainer":
        members = [as_float_array(m) for m in members]
        if not members:
            raise ValueError("pooled regression needs at least one member series")
        n = self.n_lags
        designs, targets = [], []
        for member in members:
            if member.shape[0] <= n:
                raise SeriesTooShort(
                    f"member of length {member.shape[0]} yields no lag-{n} windows"
                )
            X, target = _lag_design(member, n, n)
            if self.fourier is not None:
                t = np.arange(n + 1, member.shape[0] + 1, dtype=float)
                X = np.column_stack([X, fourier_terms(t, self.fourier)])
            designs.append(X)
            targets.append(target)
        self.fit_ = fit_linear(np.vstack(designs), np.concatenate(targets))
        self.coefficient_table_ = self._build_table()
        return self

    def _build_table(self) -> tuple[CoefficientRow, ...]:
        n = self.n_lags
        rows = list(_lag_table(self.fit_, n)[:-1])
        if self.fourier is not None:
            for name, value, se in zip(
                fourier_names(self.fourier),
                self.fit_.coefficients[n:],
                self.fit_.std_errors[n:],
            ):
                rows.append(
                    CoefficientRow(name, float(value), float(se), abs(value) > 2 * se)
                )
        rows.append(
            CoefficientRow(
                "intercept",
                self.fit_.intercept,
                self.fit_.intercept_std_error,
                abs(self.fit_.intercept) > 2 * self.fit_.intercept_std_error,
            )
        )
        return tuple(rows)

    def forecast_from(self, values, horizon: int) -> np.ndarray:
        """Roll the pooled model forward from one member's tail."""
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        y = as_float_array(values)
        n = self.n_lags
        if y.shape[0] < n:
            raise SeriesTooShort(f"need at least {n} values to roll forward")
        lag_coef = self.fit_.coefficients[:n]
        fourier_coef = self.fit_.coefficients[n:]
        history = list(y)
        out = np.empty(horizon)
        for j in range(horizon):
            value = np.dot(history[-n:], lag_coef) + self.fit_.intercept
            if self.fourier is not None:
                t = y.shape[0] + j + 1
                value += float(fourier_terms(t, self.fourier) @ fourier_coef)
            out[j] = value
            history.append(value)
        return out
