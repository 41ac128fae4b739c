"""End-to-end explanation runs: split, fit, explain, score, report.

A run takes a series collection and a :class:`RunConfig`, fits (or reuses)
one global model on the training regions, and then for every series:

1. forecasts the test window with the global model;
2. builds one neighbourhood per configured method from the training region;
3. fits every configured explainer kind on each neighbourhood, bagging the
   member forecasts, and fits the matching local benchmark directly on the
   raw training region;
4. scores all forecast pairs under every configured metric.

Per-series work is independent, so it can run on a thread pool; the pool
size comes from the ``LOMEF_THREADS`` environment variable (default 1).
Results are merged in series order regardless of completion order and all
randomness is derived from the run seed, so report bundles are
byte-identical across thread counts and repeat runs.

Failures of a single (series, method, explainer) combination are recorded
and skipped, never fatal to the run; only an unusable data set or a global
model that cannot fit at all abort.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SeriesSet, SplitSeries, child_seed, split, validate
from .evaluation import (
    MEASURE_NAMES,
    AggregateRow,
    EvaluationRecord,
    MetricKind,
    aggregate,
    primary_errors,
    secondary_measures,
    stability_iqr,
)
from .exceptions import LomefError, ParseError, TooFewRuns, ValidationError
from .explainers import (
    ExplainerKind,
    FittedExplainer,
    finalize_forecast,
    fit_explainer,
    fit_local_benchmark,
)
from .gfm import (
    ExternalModelForecaster,
    GlobalForecaster,
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
from .preprocess import WindowConfig

__all__ = [
    "RunConfig",
    "RunResult",
    "FailureRecord",
    "StabilityRow",
    "StabilityResult",
    "DEFAULT_METHODS",
    "DEFAULT_EXPLAINERS",
    "DEFAULT_METRICS",
    "parse_config",
    "build_model",
    "run_pipeline",
    "run_stability",
    "write_report",
    "write_stability",
    "read_bundle_forecasts",
    "read_bundle_explanations",
    "BundleSeries",
    "explanation_to_dict",
    "thread_count",
]

DEFAULT_METHODS = (
    NeighbourhoodMethod.NF,
    NeighbourhoodMethod.NSTL,
    NeighbourhoodMethod.NSIEVE,
)
DEFAULT_EXPLAINERS = tuple(ExplainerKind)
DEFAULT_METRICS = (MetricKind.MASE, MetricKind.RMSE, MetricKind.MAE)

_MODEL_NAMES = ("pooled_ar", "mlp", "external", "oracle_stub")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    ``dataset`` and ``out`` are used by the command-line entry points
    (library callers pass data and output locations directly).  ``horizon``
    overrides the horizon declared in the data file.  ``gfm`` picks the
    global model; ``external`` additionally needs ``external_command``.
    """

    dataset: str | None = None
    out: str | None = None
    gfm: str = "pooled_ar"
    external_command: str | None = None
    methods: tuple[NeighbourhoodMethod, ...] = DEFAULT_METHODS
    explainers: tuple[ExplainerKind, ...] = DEFAULT_EXPLAINERS
    metrics: tuple[MetricKind, ...] = DEFAULT_METRICS
    n_members: int = 100
    block_length: int | None = None
    seed: int = 0
    log_transform: bool = True
    alpha: float = 0.05
    m_tests: int | None = None
    n_runs: int = 5
    window: int | None = None
    horizon: int | None = None

    def __post_init__(self):
        # accept plain strings ("nf", "ets", "rmse") as well as enum members
        object.__setattr__(
            self, "methods",
            tuple(NeighbourhoodMethod(m) for m in self.methods),
        )
        object.__setattr__(
            self, "explainers",
            tuple(ExplainerKind(e) for e in self.explainers),
        )
        object.__setattr__(
            self, "metrics", tuple(MetricKind(m) for m in self.metrics)
        )


@dataclass(frozen=True)
class FailureRecord:
    """A skipped combination and why (empty fields mean 'not applicable')."""

    series_id: str
    method: str
    explainer: str
    stage: str
    message: str


@dataclass
class RunResult:
    config: RunConfig
    series_ids: tuple[str, ...]
    records: list[EvaluationRecord]
    aggregate_rows: list[AggregateRow]
    failures: list[FailureRecord]
    trains: dict[str, np.ndarray]
    actuals: dict[str, np.ndarray]
    global_forecasts: dict[str, np.ndarray]
    local_forecasts: dict[tuple[str, str], np.ndarray]
    explainer_forecasts: dict[tuple[str, str, str], np.ndarray]
    explanations: dict[tuple[str, str, str], FittedExplainer]


@dataclass(frozen=True)
class StabilityRow:
    explainer: str
    method: str
    metric: str
    n_runs: int
    iqr: float


@dataclass
class StabilityResult:
    config: RunConfig
    n_runs: int
    rows: list[StabilityRow]
    run_medians: dict[tuple[str, str, str], tuple[float, ...]]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _parse_bool(value: str, key: str, line: int) -> bool:
    token = value.lower()
    if token not in ("true", "false"):
        raise ParseError(f"{key} must be true or false, got {value!r}", line=line)
    return token == "true"


def _parse_int(value: str, key: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{key} must be an integer, got {value!r}", line=line) from None


def _parse_list(value: str, enum_type, key: str, line: int) -> tuple:
    items = []
    for token in value.split(","):
        token = token.strip()
        try:
            items.append(enum_type(token))
        except ValueError:
            valid = ", ".join(e.value for e in enum_type)
            raise ParseError(
                f"{key} entry {token!r} is not one of: {valid}", line=line
            ) from None
    return tuple(items)


def parse_config(path) -> RunConfig:
    """Read ``key = value`` lines into a RunConfig.

    Blank lines and ``#`` comments are ignored.  List-valued keys
    (``methods``, ``explainers``, ``metrics``) take comma-separated values.
    Unknown keys and malformed values raise :class:`ParseError` with the
    offending line number.
    """
    updates: dict = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key = value, got {line!r}", line=line_no)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in updates:
                raise ParseError(f"duplicate key {key!r}", line=line_no)
            if key == "gfm":
                if value not in _MODEL_NAMES:
                    raise ParseError(
                        f"gfm must be one of {', '.join(_MODEL_NAMES)},"
                        f" got {value!r}",
                        line=line_no,
                    )
                updates[key] = value
            elif key in ("dataset", "out", "external_command"):
                updates[key] = value
            elif key == "methods":
                updates[key] = _parse_list(value, NeighbourhoodMethod, key, line_no)
            elif key == "explainers":
                updates[key] = _parse_list(value, ExplainerKind, key, line_no)
            elif key == "metrics":
                updates[key] = _parse_list(value, MetricKind, key, line_no)
            elif key in ("n_members", "seed", "n_runs", "block_length", "window",
                         "m_tests", "horizon"):
                updates[key] = _parse_int(value, key, line_no)
            elif key == "log_transform":
                updates[key] = _parse_bool(value, key, line_no)
            elif key == "alpha":
                try:
                    updates[key] = float(value)
                except ValueError:
                    raise ParseError(
                        f"alpha must be a number, got {value!r}", line=line_no
                    ) from None
            else:
                raise ParseError(f"unknown key {key!r}", line=line_no)
    config = dataclasses.replace(RunConfig(), **updates)
    if config.n_members < 1:
        raise ParseError(f"n_members must be >= 1, got {config.n_members}")
    if config.n_runs < 1:
        raise ParseError(f"n_runs must be >= 1, got {config.n_runs}")
    if config.gfm == "external" and not config.external_command:
        raise ParseError("gfm = external requires external_command")
    return config


def build_model(config: RunConfig, horizon: int) -> GlobalForecaster:
    """Construct the configured (unfitted) global model."""
    if config.gfm == "pooled_ar":
        window = WindowConfig(config.window, 1) if config.window else None
        return PooledARForecaster(window=window, log_transform=config.log_transform)
    if config.gfm == "mlp":
        window = WindowConfig(config.window, horizon) if config.window else None
        return GlobalMLPForecaster(
            seed=config.seed, window=window, log_transform=config.log_transform
        )
    if config.gfm == "external":
        if not config.external_command:
            raise ValueError("gfm = external requires external_command")
        return ExternalModelForecaster(config.external_command)
    if config.gfm == "oracle_stub":
        return OracleForecaster()
    raise ValueError(f"unknown gfm {config.gfm!r}")


def thread_count() -> int:
    """Worker count from LOMEF_THREADS (default 1, minimum 1)."""
    raw = os.environ.get("LOMEF_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(
            f"LOMEF_THREADS must be an integer, got {raw!r}"
        ) from None


# ---------------------------------------------------------------------------
# per-series explanation
# ---------------------------------------------------------------------------


@dataclass
class _SeriesOutput:
    series_id: str
    records: list[EvaluationRecord] = field(default_factory=list)
    failures: list[FailureRecord] = field(default_factory=list)
    global_forecast: np.ndarray | None = None
    local_forecasts: dict[str, np.ndarray] = field(default_factory=dict)
    explainer_forecasts: dict[tuple[str, str], np.ndarray] = field(
        default_factory=dict
    )
    explanations: dict[tuple[str, str], FittedExplainer] = field(
        default_factory=dict
    )


def _build_neighbourhood(
    method: NeighbourhoodMethod,
    model: GlobalForecaster,
    item: SplitSeries,
    config: RunConfig,
    seed: int,
):
    periods = model.seasonal_periods_
    if method is NeighbourhoodMethod.NF:
        return nf_neighbourhood(model, item.train, source_id=item.series.id)
    if method is NeighbourhoodMethod.NSTL:
        return nstl_neighbourhood(
            model,
            item.train,
            periods,
            config.n_members,
            block_length=config.block_length,
            seed=seed,
            source_id=item.series.id,
        )
    return nsieve_neighbourhood(
        model,
        item.train,
        config.n_members,
        block_length=config.block_length,
        seed=seed,
        source_id=item.series.id,
        periods=periods,
    )


def _explain_series(
    model: GlobalForecaster,
    item: SplitSeries,
    config: RunConfig,
    seed: int,
) -> _SeriesOutput:
    out = _SeriesOutput(series_id=item.series.id)
    horizon = model.horizon_
    periods = model.seasonal_periods_
    window_n = model.input_window_ or None
    seasonality = max(periods) if periods else 1
    count, non_negative = model.is_count_data_, model.non_negative_

    try:
        out.global_forecast = model.forecast(item.train, horizon)
    except LomefError as exc:
        out.failures.append(
            FailureRecord(item.series.id, "", "", "global_forecast", str(exc))
        )
        return out

    neighbourhoods = {}
    for method in config.methods:
        try:
            neighbourhoods[method] = _build_neighbourhood(
                method, model, item, config, seed
            )
        except LomefError as exc:
            out.failures.append(
                FailureRecord(
                    item.series.id, method.value, "", "neighbourhood", str(exc)
                )
            )

    local_forecasts = {}
    for kind in config.explainers:
        try:
            _, raw = fit_local_benchmark(
                kind, item.train, horizon, periods, window_n
            )
            local_forecasts[kind] = finalize_forecast(raw, count, non_negative)
            out.local_forecasts[kind.value] = local_forecasts[kind]
        except LomefError as exc:
            out.failures.append(
                FailureRecord(
                    item.series.id, "", kind.value, "local_benchmark", str(exc)
                )
            )

    for method in config.methods:
        neighbourhood = neighbourhoods.get(method)
        if neighbourhood is None:
            continue
        for kind in config.explainers:
            if kind not in local_forecasts:
                continue
            try:
                fitted = fit_explainer(
                    kind, neighbourhood, horizon, periods, window_n
                )
            except LomefError as exc:
                out.failures.append(
                    FailureRecord(
                        item.series.id,
                        method.value,
                        kind.value,
                        "explainer",
                        str(exc),
                    )
                )
                continue
            final = finalize_forecast(fitted.forecast, count, non_negative)
            out.explanations[(method.value, kind.value)] = fitted
            out.explainer_forecasts[(method.value, kind.value)] = final
            for metric in config.metrics:
                try:
                    errors = primary_errors(
                        metric,
                        item.test,
                        out.global_forecast,
                        local_forecasts[kind],
                        final,
                        train=item.train,
                        seasonality=seasonality,
                    )
                except LomefError as exc:
                    out.failures.append(
                        FailureRecord(
                            item.series.id,
                            method.value,
                            kind.value,
                            f"metric:{metric.value}",
                            str(exc),
                        )
                    )
                    continue
                out.records.append(
                    EvaluationRecord(
                        series_id=item.series.id,
                        explainer=kind.value,
                        method=method.value,
                        metric=metric.value,
                        errors=errors,
                        measures=secondary_measures(errors),
                    )
                )
    return out


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------


def _apply_horizon(series_set: SeriesSet, horizon: int | None) -> SeriesSet:
    """Override the declared horizon, re-checking the collection contract."""
    if horizon is None or horizon == series_set.horizon:
        return series_set
    replaced = tuple(
        dataclasses.replace(s, horizon=horizon) for s in series_set.series
    )
    result = SeriesSet(series=replaced, name=series_set.name)
    violations = validate(result)
    if violations:
        raise ValidationError(violations)
    return result


def run_pipeline(
    series_set: SeriesSet,
    config: RunConfig | None = None,
    model: GlobalForecaster | None = None,
) -> RunResult:
    """Explain every series of the collection under one configuration.

    ``model`` may be a pre-fitted global model (it is reused as-is);
    otherwise the configured model is built and fitted on the training
    regions here.
    """
    config = config or RunConfig()
    series_set = _apply_horizon(series_set, config.horizon)
    splits = [split(s) for s in series_set]
    if model is None:
        model = build_model(config, series_set.horizon)
        model.fit(train_region_set(series_set))

    tasks = [
        (item, child_seed(config.seed, index))
        for index, item in enumerate(splits)
    ]
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(
                pool.map(lambda t: _explain_series(model, t[0], config, t[1]), tasks)
            )
    else:
        outputs = [_explain_series(model, item, config, s) for item, s in tasks]

    records: list[EvaluationRecord] = []
    failures: list[FailureRecord] = []
    trains: dict[str, np.ndarray] = {}
    actuals: dict[str, np.ndarray] = {}
    global_forecasts: dict[str, np.ndarray] = {}
    local_forecasts: dict[tuple[str, str], np.ndarray] = {}
    explainer_forecasts: dict[tuple[str, str, str], np.ndarray] = {}
    explanations: dict[tuple[str, str, str], FittedExplainer] = {}
    for item, out in zip(splits, outputs):
        sid = item.series.id
        records.extend(out.records)
        failures.extend(out.failures)
        trains[sid] = item.train
        actuals[sid] = item.test
        if out.global_forecast is not None:
            global_forecasts[sid] = out.global_forecast
        for kind, forecast in out.local_forecasts.items():
            local_forecasts[(sid, kind)] = forecast
        for (method, kind), forecast in out.explainer_forecasts.items():
            explainer_forecasts[(sid, method, kind)] = forecast
        for (method, kind), fitted in out.explanations.items():
            explanations[(sid, method, kind)] = fitted

    aggregate_rows = (
        aggregate(records, alpha=config.alpha, m_tests=config.m_tests)
        if records
        else []
    )
    return RunResult(
        config=config,
        series_ids=tuple(s.id for s in series_set.series),
        records=records,
        aggregate_rows=aggregate_rows,
        failures=failures,
        trains=trains,
        actuals=actuals,
        global_forecasts=global_forecasts,
        local_forecasts=local_forecasts,
        explainer_forecasts=explainer_forecasts,
        explanations=explanations,
    )


def run_stability(
    series_set: SeriesSet,
    config: RunConfig | None = None,
    n_runs: int | None = None,
    model: GlobalForecaster | None = None,
) -> StabilityResult:
    """Repeat the run with independent seeds; spread of the per-run medians.

    The global model is fitted once (it does not depend on neighbourhood
    randomness); each repetition re-draws every bootstrap neighbourhood.
    For each (explainer, method, metric) group the per-run median of the
    explainer-to-global error is collected and summarised by its
    interquartile range: small values mean explanations do not hinge on a
    particular bootstrap draw.
    """
    config = config or RunConfig()
    series_set = _apply_horizon(series_set, config.horizon)
    n_runs = n_runs if n_runs is not None else config.n_runs
    if n_runs < 2:
        raise TooFewRuns(f"stability needs >= 2 runs, got {n_runs}")
    if model is None:
        model = build_model(config, series_set.horizon)
        model.fit(train_region_set(series_set))

    per_group: dict[tuple[str, str, str], list[float]] = {}
    for run_index in range(n_runs):
        run_config = dataclasses.replace(
            config, seed=child_seed(config.seed, run_index)
        )
        result = run_pipeline(series_set, run_config, model=model)
        grouped: dict[tuple[str, str, str], list[float]] = {}
        for record in result.records:
            key = (record.explainer, record.method, record.metric)
            grouped.setdefault(key, []).append(record.errors.e_global_explainer)
        for key, values in grouped.items():
            per_group.setdefault(key, []).append(float(np.median(values)))

    rows = []
    run_medians = {}
    for key in sorted(per_group):
        medians = per_group[key]
        run_medians[key] = tuple(medians)
        iqr = stability_iqr(medians) if len(medians) >= 2 else float("nan")
        rows.append(
            StabilityRow(
                explainer=key[0],
                method=key[1],
                metric=key[2],
                n_runs=len(medians),
                iqr=iqr,
            )
        )
    return StabilityResult(
        config=config, n_runs=n_runs, rows=rows, run_medians=run_medians
    )


# ---------------------------------------------------------------------------
# report bundle
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


_PRIMARY_COLUMNS = (
    "e_global_explainer",
    "e_actual_global",
    "e_actual_local",
    "e_global_local",
    "e_actual_explainer",
    "e_local_explainer",
)
_MEASURE_ATTRS = (
    "fidelity_actual",
    "fidelity_local",
    "fidelity_with_explainer",
    "acc_global_localmodel",
    "acc_explainer_localmodel",
    "acc_explainer_globalmodel",
)


def _records_csv(result: RunResult) -> list[str]:
    header = (
        ["series_id", "explainer", "method", "metric"]
        + list(_PRIMARY_COLUMNS)
        + list(MEASURE_NAMES)
    )
    lines = [",".join(header)]
    for r in result.records:
        cells = [r.series_id, r.explainer, r.method, r.metric]
        cells += [_fmt(getattr(r.errors, c)) for c in _PRIMARY_COLUMNS]
        cells += [_fmt(getattr(r.measures, a)) for a in _MEASURE_ATTRS]
        lines.append(",".join(cells))
    return lines


def _aggregate_csv(rows: list[AggregateRow]) -> list[str]:
    header = ["explainer", "method", "metric", "statistic", "n_series"]
    for name in MEASURE_NAMES:
        header += [name, f"{name}_p", f"{name}_significant"]
    lines = [",".join(header)]
    for row in rows:
        cells = [row.explainer, row.method, row.metric, row.statistic,
                 str(row.n_series)]
        for name in MEASURE_NAMES:
            cells += [
                _fmt(row.values[name]),
                _fmt(row.p_values[name]),
                _fmt(row.significant[name]),
            ]
        lines.append(",".join(cells))
    return lines


def _forecasts_csv(result: RunResult) -> list[str]:
    """Long-form table of every plotted vector.

    ``step`` counts 1..h over the forecast window; training values carry
    steps <= 0 (0 is the last training observation), which lets charts be
    rebuilt from the bundle alone.
    """
    lines = [",".join(["series_id", "source", "method", "explainer", "step",
                       "value"])]

    def emit(sid: str, source: str, method: str, kind: str, values,
             start: int = 1) -> None:
        for step, value in enumerate(values, start=start):
            lines.append(
                ",".join([sid, source, method, kind, str(step), _fmt(float(value))])
            )

    for sid in result.series_ids:
        if sid in result.trains:
            train = result.trains[sid]
            emit(sid, "train", "", "", train, start=1 - train.shape[0])
        if sid in result.actuals:
            emit(sid, "actual", "", "", result.actuals[sid])
        if sid in result.global_forecasts:
            emit(sid, "global", "", "", result.global_forecasts[sid])
        for kind in result.config.explainers:
            key = (sid, kind.value)
            if key in result.local_forecasts:
                emit(sid, "local", "", kind.value, result.local_forecasts[key])
        for method in result.config.methods:
            for kind in result.config.explainers:
                key = (sid, method.value, kind.value)
                if key in result.explainer_forecasts:
                    emit(
                        sid,
                        "explainer",
                        method.value,
                        kind.value,
                        result.explainer_forecasts[key],
                    )
    return lines


def _failures_csv(failures: list[FailureRecord]) -> list[str]:
    lines = [",".join(["series_id", "method", "explainer", "stage", "message"])]
    for f in failures:
        message = f.message.replace("\n", " ").replace(",", ";")
        lines.append(",".join([f.series_id, f.method, f.explainer, f.stage,
                               message]))
    return lines


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", text)


def explanation_to_dict(
    series_id: str, method: str, fitted: FittedExplainer
) -> dict:
    """JSON-serialisable view of one fitted explanation."""
    members = np.vstack(fitted.member_forecasts)
    payload = fitted.payload
    doc: dict = {
        "series_id": series_id,
        "method": method,
        "explainer": fitted.kind.value,
        "horizon": fitted.horizon,
        "n_members": len(fitted.member_forecasts),
        "forecast": [float(v) for v in fitted.forecast],
        "forecast_low": [float(v) for v in members.min(axis=0)],
        "forecast_high": [float(v) for v in members.max(axis=0)],
        "chosen_forms": dict(payload.chosen_forms) if payload.chosen_forms else None,
        "coefficients": None,
        "components": None,
    }
    if payload.coefficients:
        doc["coefficients"] = [
            {
                "name": row.name,
                "value": float(row.value),
                "std_error": float(row.std_error),
                "significant": bool(row.significant),
            }
            for row in payload.coefficients
        ]
    if payload.components is not None:
        tracks = payload.components
        doc["components"] = {
            "periods": list(tracks.periods),
            "trend": [float(v) for v in tracks.trend],
            "trend_low": [float(v) for v in tracks.trend_low],
            "trend_high": [float(v) for v in tracks.trend_high],
            "seasonal": [[float(v) for v in s] for s in tracks.seasonal],
            "seasonal_low": [[float(v) for v in s] for s in tracks.seasonal_low],
            "seasonal_high": [[float(v) for v in s] for s in tracks.seasonal_high],
            "remainder": [float(v) for v in tracks.remainder],
            "remainder_low": [float(v) for v in tracks.remainder_low],
            "remainder_high": [float(v) for v in tracks.remainder_high],
        }
    return doc


def write_report(result: RunResult, out_dir) -> list[Path]:
    """Write the report bundle; contents are a pure function of the result."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for name, lines in (
        ("records.csv", _records_csv(result)),
        ("aggregate.csv", _aggregate_csv(result.aggregate_rows)),
        ("forecasts.csv", _forecasts_csv(result)),
        ("failures.csv", _failures_csv(result.failures)),
    ):
        path = out / name
        _write_lines(path, lines)
        written.append(path)

    detail_dir = out / "explanations"
    detail_dir.mkdir(exist_ok=True)
    for sid in result.series_ids:
        for method in result.config.methods:
            for kind in result.config.explainers:
                key = (sid, method.value, kind.value)
                fitted = result.explanations.get(key)
                if fitted is None:
                    continue
                doc = explanation_to_dict(sid, method.value, fitted)
                path = detail_dir / (
                    f"{_safe_name(sid)}__{method.value}__{kind.value}.json"
                )
                path.write_text(
                    json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8",
                )
                written.append(path)
    return written


@dataclass
class BundleSeries:
    """One series' plotted vectors, reconstructed from a report bundle."""

    train: np.ndarray
    actual: np.ndarray
    global_forecast: np.ndarray | None
    local: dict[str, np.ndarray]
    explainer: dict[tuple[str, str], np.ndarray]


def read_bundle_forecasts(run_dir) -> dict[str, BundleSeries]:
    """Parse ``forecasts.csv`` of a report bundle back into arrays."""
    path = Path(run_dir) / "forecasts.csv"
    raw: dict[str, dict[tuple[str, str, str], list[tuple[int, float]]]] = {}
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        expected = "series_id,source,method,explainer,step,value"
        if header != expected:
            raise ParseError(f"expected header {expected!r}, got {header!r}")
        for line_no, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ParseError(
                    f"expected 6 columns, got {len(parts)}", line=line_no
                )
            sid, source, method, kind, step, value = parts
            try:
                entry = (int(step), float(value))
            except ValueError:
                raise ParseError(f"bad row {line!r}", line=line_no) from None
            raw.setdefault(sid, {}).setdefault((source, method, kind), []).append(
                entry
            )

    series: dict[str, BundleSeries] = {}
    for sid, groups in raw.items():
        vectors = {
            key: np.array([v for _, v in sorted(entries)])
            for key, entries in groups.items()
        }
        series[sid] = BundleSeries(
            train=vectors.get(("train", "", ""), np.empty(0)),
            actual=vectors.get(("actual", "", ""), np.empty(0)),
            global_forecast=vectors.get(("global", "", "")),
            local={
                key[2]: vec
                for key, vec in vectors.items()
                if key[0] == "local"
            },
            explainer={
                (key[1], key[2]): vec
                for key, vec in vectors.items()
                if key[0] == "explainer"
            },
        )
    return series


def read_bundle_explanations(run_dir) -> dict[tuple[str, str, str], dict]:
    """Load every explanation JSON of a report bundle."""
    detail_dir = Path(run_dir) / "explanations"
    docs: dict[tuple[str, str, str], dict] = {}
    if not detail_dir.is_dir():
        return docs
    for path in sorted(detail_dir.glob("*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        docs[(doc["series_id"], doc["method"], doc["explainer"])] = doc
    return docs


def write_stability(result: StabilityResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(["explainer", "method", "metric", "n_runs", "iqr"])]
    for row in result.rows:
        lines.append(
            ",".join(
                [row.explainer, row.method, row.metric, str(row.n_runs),
                 _fmt(row.iqr)]
            )
        )
    path = out / "stability.csv"
    _write_lines(path, lines)
    return path
