"""Fitting surrogates over a neighbourhood and summarising what they chose.

``fit_explainer`` is the one entry point the pipeline uses: build the right
estimator for the explainer kind and the series' seasonality, fit it per
neighbourhood member (or pooled, for PR), bag the member forecasts, and
distil the fitted models into an :class:`ExplanationPayload`.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
from sklearn.base import clone

from ..exceptions import EmptyNeighbourhood, FitFailure, MixedKinds
from ..neighbourhood import Neighbourhood
from ..preprocess import FourierConfig
from .base import (
    CoefficientRow,
    ComponentTracks,
    ExplainerKind,
    ExplanationPayload,
    FittedExplainer,
    bag_forecasts,
)
from .decomposition import DecompositionEtsExplainer
from .ets import MAX_ETS_PERIOD, EtsExplainer
from .regression import ArExplainer, DhrArExplainer, PooledRegressionExplainer
from .theta import ThetaExplainer

__all__ = [
    "make_explainer",
    "fit_explainer",
    "fit_local_benchmark",
    "summarize_models",
]


def make_explainer(kind, seasonal_periods=(), window_n: int | None = None):
    """Unfitted estimator for a kind, configured for a series' seasonality.

    Single-frequency surrogates pick their period here: exponential
    smoothing takes the smallest period it can estimate (short cycles only),
    theta takes the largest (dominant) one; decomposition and harmonic
    surrogates use all periods.
    """
    kind = ExplainerKind(kind)
    periods = tuple(sorted(int(p) for p in seasonal_periods))
    if kind is ExplainerKind.ETS:
        period = next((p for p in periods if p <= MAX_ETS_PERIOD), None)
        return EtsExplainer(seasonal_period=period)
    if kind is ExplainerKind.THETA:
        return ThetaExplainer(seasonal_period=max(periods) if periods else None)
    if kind in (ExplainerKind.STL_ETS, ExplainerKind.MSTL_ETS):
        return DecompositionEtsExplainer(periods=periods)
    if kind is ExplainerKind.DHR_AR:
        return DhrArExplainer(periods=periods)
    if kind is ExplainerKind.AR:
        return ArExplainer(max_order=window_n)
    if kind is ExplainerKind.PR:
        fourier = (
            FourierConfig(periods, (1,) * len(periods)) if periods else None
        )
        return PooledRegressionExplainer(n_lags=window_n or 8, fourier=fourier)
    raise ValueError(f"unknown explainer kind {kind!r}")


def fit_explainer(
    kind,
    neighbourhood: Neighbourhood,
    horizon: int,
    seasonal_periods=(),
    window_n: int | None = None,
) -> FittedExplainer:
    """Fit one explainer kind on a neighbourhood and bag its forecasts."""
    kind = ExplainerKind(kind)
    fits = neighbourhood.member_fits
    if not fits:
        raise EmptyNeighbourhood("neighbourhood has no member fits")
    lags = window_n or math.ceil(1.5 * horizon)

    if kind is ExplainerKind.PR:
        if len(fits) < 2:
            raise FitFailure(
                "pooled regression needs a bootstrap neighbourhood (N > 1)"
            )
        model = make_explainer(kind, seasonal_periods, lags).fit(fits)
        models: tuple = (model,)
        member_forecasts = tuple(model.forecast_from(f, horizon) for f in fits)
    else:
        base = make_explainer(kind, seasonal_periods, window_n)
        models = tuple(clone(base).fit(f) for f in fits)
        member_forecasts = tuple(m.forecast(horizon) for m in models)

    return FittedExplainer(
        kind=kind,
        horizon=horizon,
        models=models,
        member_forecasts=member_forecasts,
        forecast=bag_forecasts(member_forecasts),
        payload=summarize_models(models),
    )


def fit_local_benchmark(
    kind,
    values,
    horizon: int,
    seasonal_periods=(),
    window_n: int | None = None,
):
    """Fit the same surrogate directly on one raw series.

    Mirrors the construction in :func:`fit_explainer` exactly (same lag
    defaults, same estimator configuration), so that a single-member
    neighbourhood whose member fit equals the raw series reproduces this
    benchmark bit for bit.  Returns ``(model, forecast)``.
    """
    kind = ExplainerKind(kind)
    if kind is ExplainerKind.PR:
        lags = window_n or math.ceil(1.5 * horizon)
        model = make_explainer(kind, seasonal_periods, lags).fit([values])
        return model, model.forecast_from(values, horizon)
    model = make_explainer(kind, seasonal_periods, window_n).fit(values)
    return model, model.forecast(horizon)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def _aggregate_tables(tables: list[tuple[CoefficientRow, ...]]):
    """Combine per-member coefficient tables into one.

    A single table passes through unchanged (its own regression standard
    errors are meaningful).  Across members, the bootstrap distribution is
    the uncertainty: value = mean, std-error = std across members (a lag a
    member did not select counts as 0), significant when the mean clears
    two of those.
    """
    if len(tables) == 1:
        return tables[0]
    names: list[str] = []
    for table in tables:
        for row in table:
            if row.name not in names:
                names.append(row.name)
    by_member = [{row.name: row.value for row in table} for table in tables]
    out = []
    for name in names:
        values = np.array([member.get(name, 0.0) for member in by_member])
        mean = float(values.mean())
        se = float(values.std(ddof=1))
        out.append(CoefficientRow(name, mean, se, se > 0 and abs(mean) > 2 * se))
    return tuple(out)


def _component_tracks(models) -> ComponentTracks:
    comps = [m.components_ for m in models]
    periods = comps[0].periods
    trend = np.vstack([c.trend for c in comps])
    remainder = np.vstack([c.remainder for c in comps])
    seasonal = [
        np.vstack([c.seasonal[i] for c in comps]) for i in range(len(periods))
    ]
    return ComponentTracks(
        periods=periods,
        trend=trend.mean(axis=0),
        trend_low=trend.min(axis=0),
        trend_high=trend.max(axis=0),
        seasonal=tuple(s.mean(axis=0) for s in seasonal),
        seasonal_low=tuple(s.min(axis=0) for s in seasonal),
        seasonal_high=tuple(s.max(axis=0) for s in seasonal),
        remainder=remainder.mean(axis=0),
        remainder_low=remainder.min(axis=0),
        remainder_high=remainder.max(axis=0),
    )


def summarize_models(models) -> ExplanationPayload:
    """Distil per-member fitted models into the interpretable payload.

    - exponential smoothing: histogram of chosen (trend, seasonal) forms;
    - theta: aggregated (alpha, drift) table;
    - regression kinds: aggregated coefficient table;
    - decomposition kinds: mean component tracks with min/max envelopes,
      plus the inner smoothing form histogram.
    """
    models = list(models)
    if not models:
        raise EmptyNeighbourhood("no models to summarise")
    kinds = {ExplainerKind(m.kind) for m in models}
    if len(kinds) > 1:
        raise MixedKinds(f"cannot summarise mixed kinds {sorted(k.value for k in kinds)}")
    kind = kinds.pop()

    if kind is ExplainerKind.ETS:
        return ExplanationPayload(
            chosen_forms=dict(Counter(m.form_.label() for m in models))
        )
    if kind is ExplainerKind.THETA:
        tables = [
            (
                CoefficientRow("alpha", m.alpha_, 0.0, False),
                CoefficientRow("drift", m.drift_, 0.0, False),
            )
            for m in models
        ]
        return ExplanationPayload(coefficients=_aggregate_tables(tables))
    if kind in (ExplainerKind.AR, ExplainerKind.DHR_AR, ExplainerKind.PR):
        return ExplanationPayload(
            coefficients=_aggregate_tables([m.coefficient_table_ for m in models])
        )
    if kind in (ExplainerKind.STL_ETS, ExplainerKind.MSTL_ETS):
        return ExplanationPayload(
            chosen_forms=dict(Counter(m.ets_.form_.label() for m in models)),
            components=_component_tracks(models),
        )
    raise ValueError(f"unknown explainer kind {kind!r}")
