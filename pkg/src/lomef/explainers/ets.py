"""Additive exponential smoothing with automatic form selection.

Candidate forms combine an additive error with {none, additive, damped
additive} trend and {none, additive} seasonality.  Smoothing parameters are
chosen by Nelder-Mead on the sum of squared one-step errors (box constraints
(0, 1] imposed through a logistic reparameterisation); initial states come
from a classical-decomposition heuristic and are counted as fitted
quantities by the information criterion:

    AICc = n ln(SSE / n) + 2k + 2k(k+1) / (n - k - 1),
    k = #smoothing parameters + #initial states + 1.

The form with the lowest AICc wins; ties go to the form with fewer
parameters.  Seasonal candidates enter only when the cycle is short enough
to estimate (period <= 24) and the series covers at least two full cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.base import BaseEstimator

from .._linreg import gaussian_aicc
from ..core import as_float_array
from ..exceptions import FitFailure, SeriesTooShort
from ._classical import classical_seasonal
from ._ets_kernel import ets_run
from .base import ExplainerKind

__all__ = ["EtsForm", "EtsExplainer", "MAX_ETS_PERIOD", "MIN_ETS_LENGTH"]

MAX_ETS_PERIOD = 24
MIN_ETS_LENGTH = 10

_MAX_ITER = 500
_TOL = 1e-8


@dataclass(frozen=True)
class EtsForm:
    """One candidate structure: trend in {N, A, Ad}, seasonal in {N, A}."""

    trend: str
    seasonal: str

    @property
    def has_trend(self) -> bool:
        return self.trend != "N"

    @property
    def damped(self) -> bool:
        return self.trend == "Ad"

    @property
    def has_seasonal(self) -> bool:
        return self.seasonal == "A"

    @property
    def param_names(self) -> tuple[str, ...]:
        names = ["alpha"]
        if self.has_trend:
            names.append("beta")
        if self.has_seasonal:
            names.append("gamma")
        if self.damped:
            names.append("phi")
        return tuple(names)

    def label(self) -> str:
        return f"{self.trend},{self.seasonal}"


_ALL_FORMS = (
    EtsForm("N", "N"),
    EtsForm("A", "N"),
    EtsForm("Ad", "N"),
    EtsForm("N", "A"),
    EtsForm("A", "A"),
    EtsForm("Ad", "A"),
)

_START = {"alpha": 0.2, "beta": 0.05, "gamma": 0.05, "phi": 0.95}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def _initial_states(y: np.ndarray, form: EtsForm, m: int) -> tuple[float, float, np.ndarray]:
    """Heuristic start states: classical seasonal indices, then a straight
    line through the first few deseasonalised points."""
    if form.has_seasonal:
        s0 = classical_seasonal(y, m)
        adjusted = y - np.tile(s0, y.shape[0] // m + 1)[: y.shape[0]]
    else:
        s0 = np.zeros(max(m, 1))
        adjusted = y
    head = adjusted[: min(10, adjusted.shape[0])]
    t = np.arange(head.shape[0], dtype=float)
    if form.has_trend and head.shape[0] >= 2:
        slope, intercept = np.polyfit(t, head, 1)
        # level state precedes the first observation: level + trend
        # reproduces the line's value at t = 0
        return float(intercept - slope), float(slope), s0
    return float(head.mean()), 0.0, s0


def _candidate_forms(length: int, period: int | None) -> list[EtsForm]:
    seasonal_ok = (
        period is not None and period <= MAX_ETS_PERIOD and length >= 2 * period
    )
    forms = [f for f in _ALL_FORMS if seasonal_ok or not f.has_seasonal]
    return sorted(forms, key=lambda f: len(f.param_names))


def _fit_form(y: np.ndarray, form: EtsForm, m: int) -> dict | None:
    """Optimize one candidate; None when its SSE never came out finite."""
    l0, b0, s0 = _initial_states(y, form, m)
    names = form.param_names

    def unpack(theta: np.ndarray) -> dict[str, float]:
        values = _sigmoid(theta)
        params = dict(zip(names, values))
        params.setdefault("beta", 0.0)
        params.setdefault("gamma", 0.0)
        params.setdefault("phi", 1.0)
        return params

    def objective(theta: np.ndarray) -> float:
        p = unpack(theta)
        sse, *_ = ets_run(
            y, m, form.has_trend, form.damped, form.has_seasonal,
            p["alpha"], p["beta"], p["gamma"], p["phi"], l0, b0, s0,
        )
        return sse if np.isfinite(sse) else np.inf

    theta0 = np.array([_logit(_START[name]) for name in names])
    result = minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        options={"maxiter": _MAX_ITER, "fatol": _TOL, "xatol": 1e-6},
    )
    params = unpack(result.x)
    sse, level, trend, seasonal = ets_run(
        y, m, form.has_trend, form.damped, form.has_seasonal,
        params["alpha"], params["beta"], params["gamma"], params["phi"],
        l0, b0, s0,
    )
    if not np.isfinite(sse):
        return None

    n = y.shape[0]
    n_states = 1 + (1 if form.has_trend else 0) + (m if form.has_seasonal else 0)
    k = len(names) + n_states + 1
    return {
        "form": form,
        "params": {name: params[name] for name in names},
        "all_params": params,
        "sse": sse,
        "aicc": gaussian_aicc(sse, n, k),
        "level": level,
        "trend": trend,
        "seasonal": seasonal,
        "k": k,
    }


class EtsExplainer(BaseEstimator):
    """Exponential smoothing surrogate with automatic form selection."""

    kind = ExplainerKind.ETS

    def __init__(self, seasonal_period: int | None = None):
        self.seasonal_period = seasonal_period

    def fit(self, values) -> "EtsExplainer":
        y = as_float_array(values)
        n = y.shape[0]
        if n < MIN_ETS_LENGTH:
            raise SeriesTooShort(
                f"exponential smoothing needs >= {MIN_ETS_LENGTH} points, got {n}"
            )
        period = self.seasonal_period
        m = period if (period is not None and n >= 2 * period) else 1

        best = None
        for form in _candidate_forms(n, period):
            fitted = _fit_form(y, form, m if form.has_seasonal else 1)
            if fitted is None:
                continue
            if best is None or fitted["aicc"] < best["aicc"]:
                best = fitted
        if best is None:
            raise FitFailure("every exponential smoothing candidate diverged")

        self.form_ = best["form"]
        self.params_ = best["params"]
        self.sse_ = best["sse"]
        self.aicc_ = best["aicc"]
        self.level_ = best["level"]
        self.trend_ = best["trend"]
        self.seasonal_states_ = best["seasonal"]
        self.n_obs_ = n
        return self

    def forecast(self, horizon: int) -> np.ndarray:
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        form = self.form_
        phi = self.params_.get("phi", 1.0)
        out = np.empty(horizon)
        damp = 0.0
        for j in range(1, horizon + 1):
            if form.has_trend:
                damp = damp + phi**j if form.damped else float(j)
                point = self.level_ + damp * self.trend_
            else:
                point = self.level_
            if form.has_seasonal:
                m = self.seasonal_states_.shape[0]
                point += self.seasonal_states_[(self.n_obs_ + j - 1) % m]
            out[j - 1] = point
        return out
