"""Local model-agnostic explanations for global time-series forecasters.

A global model trained across many related series is accurate but opaque.
This package explains its individual forecasts by fitting interpretable
univariate surrogates on a *neighbourhood* of the explained series --
bootstrapped variants passed through the global model's own in-sample
one-step-ahead behaviour -- and evaluates each explanation for fidelity to
the global model, accuracy against the actuals, and stability across
bootstrap draws.

Typical use::

    from lomef import dataio, pipeline

    data = dataio.load_csv("series.csv")
    result = pipeline.run_pipeline(data, pipeline.RunConfig(seed=7))
    pipeline.write_report(result, "report/")
"""

from . import dataio, evaluation, pipeline, plots
from .core import SeriesSet, TimeSeries, split, validate
from .evaluation import (
    EvaluationRecord,
    MetricKind,
    PrimaryErrors,
    SecondaryMeasures,
    aggregate,
    primary_errors,
    secondary_measures,
    stability_iqr,
)
from .exceptions import LomefError
from .explainers import (
    ExplainerKind,
    FittedExplainer,
    fit_explainer,
    fit_local_benchmark,
    make_explainer,
)
from .gfm import (
    ExternalModelForecaster,
    GlobalMLPForecaster,
    OracleForecaster,
    PooledARForecaster,
    train_region_set,
)
from .neighbourhood import (
    NeighbourhoodMethod,
    nf_neighbourhood,
    nsieve_neighbourhood,
    nstl_neighbourhood,
)
from .pipeline import RunConfig, RunResult, run_pipeline, run_stability

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LomefError",
    "TimeSeries",
    "SeriesSet",
    "split",
    "validate",
    "MetricKind",
    "PrimaryErrors",
    "SecondaryMeasures",
    "EvaluationRecord",
    "primary_errors",
    "secondary_measures",
    "aggregate",
    "stability_iqr",
    "ExplainerKind",
    "FittedExplainer",
    "make_explainer",
    "fit_explainer",
    "fit_local_benchmark",
    "PooledARForecaster",
    "GlobalMLPForecaster",
    "OracleForecaster",
    "ExternalModelForecaster",
    "train_region_set",
    "NeighbourhoodMethod",
    "nf_neighbourhood",
    "nstl_neighbourhood",
    "nsieve_neighbourhood",
    "RunConfig",
    "RunResult",
    "run_pipeline",
    "run_stability",
    "dataio",
    "evaluation",
    "pipeline",
    "plots",
]
