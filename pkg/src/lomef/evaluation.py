"""Fidelity, accuracy and stability evaluation.

For one explained series there are four forecast-like vectors over the test
window: the actuals, the global model's forecast, the local benchmark
model's forecast, and the (bagged) explainer forecast.  Every evaluation
starts from the pairwise errors between those vectors under a metric, and
the reported quantities are signed differences of pairwise errors:

- ``fidelity_actual``          e(global, explainer) - e(actual, global)
- ``fidelity_local``           e(global, explainer) - e(global, local)
- ``fidelity_with_explainer``  e(global, explainer) - e(local, explainer)
- ``acc_global_localmodel``    e(actual, global)    - e(actual, local)
- ``acc_explainer_localmodel`` e(actual, explainer) - e(actual, local)
- ``acc_explainer_globalmodel``e(actual, explainer) - e(actual, global)

Negative fidelity values mean the explainer tracks the global model more
closely than the quantity it is compared against; negative accuracy values
mean the first model beats the second on actuals.  Two cross-measure
identities hold *exactly* (not just to rounding), which the implementation
guarantees by deriving two of the measures from the others; see
:func:`secondary_measures`.

Scaled errors divide by the training region's seasonal-naive error (largest
seasonal period; 1 when non-seasonal), and the same training-based
denominator is used for forecast-to-forecast pairs, which keeps every
pairwise error symmetric in its two arguments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import betainc

from .exceptions import (
    DegenerateSample,
    EmptyGroup,
    LengthMismatch,
    SeriesTooShort,
    TooFewRuns,
    ZeroDenominator,
)

__all__ = [
    "MetricKind",
    "PrimaryErrors",
    "SecondaryMeasures",
    "EvaluationRecord",
    "AggregateRow",
    "TTestResult",
    "MEASURE_NAMES",
    "rmse",
    "mae",
    "mase",
    "compute_metric",
    "primary_errors",
    "secondary_measures",
    "aggregate",
    "student_t_cdf",
    "t_test_less_than_zero",
    "bonferroni",
    "stability_iqr",
]


class MetricKind(str, enum.Enum):
    MASE = "mase"
    RMSE = "rmse"
    MAE = "mae"


#: Report column names, in fixed order, for the six secondary measures.
MEASURE_NAMES = (
    "Fidelity_Actual",
    "Fidelity_Local",
    "Fidelity_with_Explainer",
    "Acc_Global_LocalModel",
    "Acc_Explainer_LocalModel",
    "Acc_Explainer_GlobalModel",
)

_MEASURE_FIELDS = (
    "fidelity_actual",
    "fidelity_local",
    "fidelity_with_explainer",
    "acc_global_localmodel",
    "acc_explainer_localmodel",
    "acc_explainer_globalmodel",
)


def _check_pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape:
        raise LengthMismatch(f"vector lengths differ: {a.shape[0]} vs {f.shape[0]}")
    if a.shape[0] == 0:
        raise LengthMismatch("cannot score empty vectors")
    return a, f


def rmse(actual, forecast) -> float:
    a, f = _check_pair(actual, forecast)
    return float(np.sqrt(np.mean((f - a) ** 2)))


def mae(actual, forecast) -> float:
    a, f = _check_pair(actual, forecast)
    return float(np.mean(np.abs(f - a)))


def mase(actual, forecast, train, seasonality: int = 1) -> float:
    """Mean absolute error scaled by the training seasonal-naive error.

    The denominator is ``(1 / (M - S)) * sum |y_t - y_{t-S}|`` over the
    training region (length M, seasonal lag S).  A constant (or exactly
    periodic) training region has no naive error to scale by and raises
    :class:`ZeroDenominator`.
    """
    a, f = _check_pair(actual, forecast)
    y = np.asarray(train, dtype=float)
    s = int(seasonality)
    if s < 1:
        raise ValueError(f"seasonality must be >= 1, got {s}")
    if y.shape[0] <= s:
        raise SeriesTooShort(
            f"training region of length {y.shape[0]} too short for seasonal lag {s}"
        )
    denominator = np.mean(np.abs(y[s:] - y[:-s]))
    if denominator == 0.0:
        raise ZeroDenominator("seasonal-naive training error is zero")
    return float(np.mean(np.abs(f - a)) / denominator)


def compute_metric(kind, actual, forecast, train=None, seasonality: int = 1) -> float:
    kind = MetricKind(kind)
    if kind is MetricKind.RMSE:
        return rmse(actual, forecast)
    if kind is MetricKind.MAE:
        return mae(actual, forecast)
    if train is None:
        raise ValueError("scaled error needs the training region")
    return mase(actual, forecast, train, seasonality)


@dataclass(frozen=True)
class PrimaryErrors:
    """All pairwise errors among actuals / global / local / explainer.

    Under every metric here the pairwise error is symmetric in its two
    vectors (the scaled error's denominator depends only on the training
    region), so each unordered pair appears once.
    """

    metric: MetricKind
    e_global_explainer: float
    e_actual_global: float
    e_actual_local: float
    e_global_local: float
    e_actual_explainer: float
    e_local_explainer: float


@dataclass(frozen=True)
class SecondaryMeasures:
    """The six signed comparison measures derived from one PrimaryErrors."""

    metric: MetricKind
    fidelity_actual: float
    fidelity_local: float
    fidelity_with_explainer: float
    acc_global_localmodel: float
    acc_explainer_localmodel: float
    acc_explainer_globalmodel: float

    def as_dict(self) -> dict[str, float]:
        return {
            name: getattr(self, field)
            for name, field in zip(MEASURE_NAMES, _MEASURE_FIELDS)
        }


def primary_errors(
    kind,
    actual,
    global_forecast,
    local_forecast,
    explainer_forecast,
    train=None,
    seasonality: int = 1,
) -> PrimaryErrors:
    """Score every pair of test-window vectors under one metric."""
    kind = MetricKind(kind)

    def err(u, v) -> float:
        return compute_metric(kind, u, v, train, seasonality)

    return PrimaryErrors(
        metric=kind,
        e_global_explainer=err(global_forecast, explainer_forecast),
        e_actual_global=err(actual, global_forecast),
        e_actual_local=err(actual, local_forecast),
        e_global_local=err(global_forecast, local_forecast),
        e_actual_explainer=err(actual, explainer_forecast),
        e_local_explainer=err(local_forecast, explainer_forecast),
    )


def secondary_measures(p: PrimaryErrors) -> SecondaryMeasures:
    """Derive the six signed measures.

    Two identities are part of the contract and must hold exactly in
    floating point, so two measures are computed via the identities rather
    than as independent subtractions (the forms are algebraically the same):

    - ``fidelity_actual - fidelity_local == e_global_local - e_actual_global``
    - ``acc_explainer_globalmodel ==
      acc_explainer_localmodel - acc_global_localmodel``
    """
    fidelity_local = p.e_global_explainer - p.e_global_local
    fidelity_actual = fidelity_local + (p.e_global_local - p.e_actual_global)
    acc_global_localmodel = p.e_actual_global - p.e_actual_local
    acc_explainer_localmodel = p.e_actual_explainer - p.e_actual_local
    return SecondaryMeasures(
        metric=p.metric,
        fidelity_actual=fidelity_actual,
        fidelity_local=fidelity_local,
        fidelity_with_explainer=p.e_global_explainer - p.e_local_explainer,
        acc_global_localmodel=acc_global_localmodel,
        acc_explainer_localmodel=acc_explainer_localmodel,
        acc_explainer_globalmodel=acc_explainer_localmodel - acc_global_localmodel,
    )


@dataclass(frozen=True)
class EvaluationRecord:
    """One (series, explainer, neighbourhood method, metric) evaluation."""

    series_id: str
    explainer: str
    method: str
    metric: str
    errors: PrimaryErrors
    measures: SecondaryMeasures


# ---------------------------------------------------------------------------
# statistical testing
# ---------------------------------------------------------------------------


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t via the regularized incomplete beta function."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return tail if t < 0 else 1.0 - tail


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    df: int


def t_test_less_than_zero(sample) -> TTestResult:
    """One-sided one-sample t-test of H1: population mean < 0."""
    values = np.asarray(sample, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise DegenerateSample(f"t-test needs at least 2 values, got {n}")
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSample("t-test sample has zero variance")
    t = float(values.mean() / (sd / math.sqrt(n)))
    return TTestResult(statistic=t, p_value=student_t_cdf(t, n - 1), df=n - 1)


def bonferroni(alpha: float, m: int) -> float:
    """Per-test significance level alpha / m."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if m < 1:
        raise ValueError(f"test count must be >= 1, got {m}")
    return alpha / m


def stability_iqr(values) -> float:
    """Interquartile range (type-7 quantiles) across independent runs."""
    arr = np.asarray(values, dtype=float)
    if arr.shape[0] < 2:
        raise TooFewRuns(f"stability needs >= 2 runs, got {arr.shape[0]}")
    q1, q3 = np.quantile(arr, [0.25, 0.75], method="linear")
    return float(q3 - q1)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregateRow:
    """Mean or median of the six measures over one record group, with the
    group's one-sided t-test verdicts at the corrected level."""

    explainer: str
    method: str
    metric: str
    statistic: str
    n_series: int
    values: dict[str, float]
    p_values: dict[str, float]
    significant: dict[str, bool]


def aggregate(
    records,
    alpha: float = 0.05,
    m_tests: int | None = None,
) -> list[AggregateRow]:
    """Group records by (explainer, method, metric); mean and median rows.

    Significance: for each measure, a one-sided t-test of "mean < 0" over
    the per-series values, at the Bonferroni-corrected level alpha / m.
    When ``m_tests`` is not given, m counts the tests actually performed
    for the group's metric: (#groups with that metric) x (6 measures).
    Degenerate samples (n < 2 or zero variance) get p = NaN, not
    significant.  The same verdicts annotate the mean and median rows.
    """
    records = list(records)
    if not records:
        raise EmptyGroup("no evaluation records to aggregate")

    groups: dict[tuple[str, str, str], list[EvaluationRecord]] = {}
    for record in records:
        groups.setdefault(
            (record.explainer, record.method, record.metric), []
        ).append(record)

    metric_group_counts: dict[str, int] = {}
    for key in groups:
        metric_group_counts[key[2]] = metric_group_counts.get(key[2], 0) + 1

    rows: list[AggregateRow] = []
    for key in sorted(groups):
        explainer, method, metric = key
        group = groups[key]
        m = m_tests or metric_group_counts[metric] * len(MEASURE_NAMES)
        level = bonferroni(alpha, m)

        samples = {
            name: np.array([getattr(r.measures, field) for r in group])
            for name, field in zip(MEASURE_NAMES, _MEASURE_FIELDS)
        }
        p_values, significant = {}, {}
        for name, sample in samples.items():
            try:
                test = t_test_less_than_zero(sample)
                p_values[name] = test.p_value
                significant[name] = test.p_value < level
            except DegenerateSample:
                p_values[name] = float("nan")
                significant[name] = False

        for statistic, fn in (("mean", np.mean), ("median", np.median)):
            rows.append(
                AggregateRow(
                    explainer=explainer,
                    method=method,
                    metric=metric,
                    statistic=statistic,
                    n_series=len(group),
                    values={name: float(fn(s)) for name, s in samples.items()},
                    p_values=dict(p_values),
                    significant=dict(significant),
                )
            )
    return rows


# keep dataclass introspection helpers close to the types they serve
PRIMARY_ERROR_FIELDS = tuple(
    f.name for f in fields(PrimaryErrors) if f.name != "metric"
)
