"""Interpretable local surrogate models and their fitting/summary machinery."""

from .base import (
    CoefficientRow,
    ComponentTracks,
    ExplainerKind,
    ExplanationPayload,
    FittedExplainer,
    bag_forecasts,
    finalize_forecast,
)
from .decomposition import DecompositionEtsExplainer
from .ets import MAX_ETS_PERIOD, MIN_ETS_LENGTH, EtsExplainer, EtsForm
from .regression import ArExplainer, DhrArExplainer, PooledRegressionExplainer
from .summary import (
    fit_explainer,
    fit_local_benchmark,
    make_explainer,
    summarize_models,
)
from .theta import ThetaExplainer

__all__ = [
    "ExplainerKind",
    "CoefficientRow",
    "ComponentTracks",
    "ExplanationPayload",
    "FittedExplainer",
    "bag_forecasts",
    "finalize_forecast",
    "EtsExplainer",
    "EtsForm",
    "MAX_ETS_PERIOD",
    "MIN_ETS_LENGTH",
    "ThetaExplainer",
    "DecompositionEtsExplainer",
    "ArExplainer",
    "DhrArExplainer",
    "PooledRegressionExplainer",
    "make_explainer",
    "fit_explainer",
    "fit_local_benchmark",
    "summarize_models",
]
