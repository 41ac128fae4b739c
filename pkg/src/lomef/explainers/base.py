"""Shared explainer types: kinds, payloads, fitted bundles, bagging."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptyNeighbourhood, LengthMismatch
from ..preprocess import ScalingRecord, postprocess

__all__ = [
    "ExplainerKind",
    "CoefficientRow",
    "ComponentTracks",
    "ExplanationPayload",
    "FittedExplainer",
    "bag_forecasts",
    "finalize_forecast",
]


class ExplainerKind(str, enum.Enum):
    """Interpretable surrogate families.

    All are univariate models fitted per neighbourhood member and bagged,
    except PR, which pools every member's lag windows into one regression.
    """

    ETS = "ets"
    THETA = "theta"
    STL_ETS = "stl_ets"
    MSTL_ETS = "mstl_ets"
    DHR_AR = "dhr_ar"
    AR = "ar"
    PR = "pr"


@dataclass(frozen=True)
class CoefficientRow:
    """One line of an interpretable coefficient table."""

    name: str
    value: float
    std_error: float
    significant: bool


@dataclass(frozen=True)
class ComponentTracks:
    """Decomposition components aggregated over neighbourhood members.

    Mean track plus pointwise min/max envelope for the trend, each seasonal
    component, and the remainder.  For a single-member neighbourhood the
    envelopes coincide with the mean.
    """

    periods: tuple[int, ...]
    trend: np.ndarray
    trend_low: np.ndarray
    trend_high: np.ndarray
    seasonal: tuple[np.ndarray, ...]
    seasonal_low: tuple[np.ndarray, ...]
    seasonal_high: tuple[np.ndarray, ...]
    remainder: np.ndarray
    remainder_low: np.ndarray
    remainder_high: np.ndarray


@dataclass(frozen=True)
class ExplanationPayload:
    """The interpretable content of a fitted explainer.

    Exactly the fields that make sense for the explainer kind are populated:
    ETS-family explainers report a histogram of chosen (trend, seasonal)
    forms; regression explainers report a coefficient table; decomposition
    explainers report component tracks (and the inner ETS histogram too).
    """

    chosen_forms: dict[str, int] | None = None
    coefficients: tuple[CoefficientRow, ...] | None = None
    components: ComponentTracks | None = None


@dataclass(frozen=True)
class FittedExplainer:
    """A fitted surrogate for one (series, neighbourhood) pair.

    ``models`` holds the per-member fitted estimators (for PR: the single
    pooled model); ``forecast`` is the bagged forecast — the arithmetic mean
    of the member forecasts, nothing else.
    """

    kind: ExplainerKind
    horizon: int
    models: tuple
    member_forecasts: tuple[np.ndarray, ...]
    forecast: np.ndarray
    payload: ExplanationPayload


def bag_forecasts(member_forecasts) -> np.ndarray:
    """Arithmetic mean of member forecasts (bagging)."""
    forecasts = list(member_forecasts)
    if not forecasts:
        raise EmptyNeighbourhood("cannot bag zero forecasts")
    lengths = {np.asarray(f).shape[0] for f in forecasts}
    if len(lengths) > 1:
        raise LengthMismatch(f"member forecasts have mixed lengths {sorted(lengths)}")
    return np.mean(np.vstack(forecasts), axis=0)


def finalize_forecast(
    values, is_count_data: bool = False, non_negative: bool = False
) -> np.ndarray:
    """Final rounding/clamping for forecasts already on the original scale.

    Surrogates train on original-scale data, so no inverse transforms apply;
    count datasets still need integer forecasts and non-negative datasets a
    zero floor.
    """
    return postprocess(values, ScalingRecord(1.0), is_count_data, non_negative)
