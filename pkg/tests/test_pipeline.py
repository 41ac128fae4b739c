"""Config parsing, end-to-end runs, stability loops, and report bundles."""

from __future__ import annotations

import numpy as np
import pytest

from lomef.dataio import synthetic_series_set
from lomef.evaluation import MEASURE_NAMES, MetricKind
from lomef.exceptions import (
    ParseError,
    SingularDesignWarning,
    TooFewRuns,
    ValidationError,
)
from lomef.explainers import ExplainerKind
from lomef.gfm import (
    GlobalMLPForecaster,
    OracleForecaster,
    PooledARForecaster,
    train_region_set,
)
from lomef.neighbourhood import NeighbourhoodMethod
from lomef.pipeline import (
    RunConfig,
    build_model,
    explanation_to_dict,
    parse_config,
    read_bundle_explanations,
    read_bundle_forecasts,
    run_pipeline,
    run_stability,
    thread_count,
    write_report,
    write_stability,
)

from conftest import make_series, make_set

SMALL = synthetic_series_set(
    n_series=4, length=44, horizon=4, seasonal_periods=(4,), seed=0
)

FAST = RunConfig(
    gfm="oracle_stub",
    methods=("nf", "nstl"),
    explainers=("theta", "ar"),
    metrics=("mase", "rmse"),
    n_members=4,
    seed=1,
)


def write_config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def tree_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestParseConfig:
    def test_full_file(self, tmp_path):
        text = """\
# run settings
dataset = data.csv
out = results

gfm = mlp
methods = nf, nstl
explainers = ets,theta
metrics = rmse
n_members = 7
block_length = 3
seed = 42
log_transform = false
alpha = 0.01
m_tests = 12
n_runs = 4
window = 9
horizon = 6
"""
        config = parse_config(write_config(tmp_path, text))
        assert config.dataset == "data.csv"
        assert config.out == "results"
        assert config.gfm == "mlp"
        assert config.methods == (NeighbourhoodMethod.NF, NeighbourhoodMethod.NSTL)
        assert config.explainers == (ExplainerKind.ETS, ExplainerKind.THETA)
        assert config.metrics == (MetricKind.RMSE,)
        assert config.n_members == 7
        assert config.block_length == 3
        assert config.seed == 42
        assert config.log_transform is False
        assert config.alpha == 0.01
        assert config.m_tests == 12
        assert config.n_runs == 4
        assert config.window == 9
        assert config.horizon == 6

    def test_empty_file_gives_defaults(self, tmp_path):
        assert parse_config(write_config(tmp_path, "# nothing\n\n")) == RunConfig()

    def test_missing_equals(self, tmp_path):
        with pytest.raises(ParseError, match="key = value") as err:
            parse_config(write_config(tmp_path, "seed = 1\nbogus line\n"))
        assert err.value.line == 2

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ParseError, match="duplicate key") as err:
            parse_config(write_config(tmp_path, "seed = 1\nseed = 2\n"))
        assert err.value.line == 2

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ParseError, match="unknown key"):
            parse_config(write_config(tmp_path, "frequency = 12\n"))

    def test_bad_model_name(self, tmp_path):
        with pytest.raises(ParseError, match="gfm must be one of"):
            parse_config(write_config(tmp_path, "gfm = arima\n"))

    def test_bad_list_entry(self, tmp_path):
        with pytest.raises(ParseError, match="not one of") as err:
            parse_config(write_config(tmp_path, "methods = nf, bogus\n"))
        assert err.value.line == 1

    def test_bad_scalar_values(self, tmp_path):
        for line, pattern in (
            ("seed = soon", "must be an integer"),
            ("log_transform = maybe", "must be true or false"),
            ("alpha = lots", "must be a number"),
        ):
            with pytest.raises(ParseError, match=pattern):
                parse_config(write_config(tmp_path, line + "\n"))

    def test_member_and_run_counts_validated(self, tmp_path):
        with pytest.raises(ParseError, match="n_members must be >= 1"):
            parse_config(write_config(tmp_path, "n_members = 0\n"))
        with pytest.raises(ParseError, match="n_runs must be >= 1"):
            parse_config(write_config(tmp_path, "n_runs = 0\n"))

    def test_external_requires_command(self, tmp_path):
        with pytest.raises(ParseError, match="external_command"):
            parse_config(write_config(tmp_path, "gfm = external\n"))


class TestRunConfig:
    def test_strings_coerced_to_enums(self):
        config = RunConfig(methods=("nsieve",), explainers=("pr",),
                           metrics=("mae",))
        assert config.methods == (NeighbourhoodMethod.NSIEVE,)
        assert config.explainers == (ExplainerKind.PR,)
        assert config.metrics == (MetricKind.MAE,)

    def test_invalid_names_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(methods=("knn",))
        with pytest.raises(ValueError):
            RunConfig(explainers=("tree",))


class TestThreadCount:
    def test_default_is_single(self, monkeypatch):
        monkeypatch.delenv("LOMEF_THREADS", raising=False)
        assert thread_count() == 1
        monkeypatch.setenv("LOMEF_THREADS", "  ")
        assert thread_count() == 1

    def test_parses_and_clamps(self, monkeypatch):
        monkeypatch.setenv("LOMEF_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("LOMEF_THREADS", "0")
        assert thread_count() == 1

    def test_junk_rejected(self, monkeypatch):
        monkeypatch.setenv("LOMEF_THREADS", "many")
        with pytest.raises(ValueError, match="LOMEF_THREADS"):
            thread_count()


class TestBuildModel:
    def test_model_selection(self):
        assert isinstance(build_model(RunConfig(), 4), PooledARForecaster)
        assert isinstance(build_model(RunConfig(gfm="mlp", seed=9), 4),
                          GlobalMLPForecaster)
        assert isinstance(build_model(RunConfig(gfm="oracle_stub"), 4),
                          OracleForecaster)

    def test_external_needs_command(self):
        config = RunConfig(gfm="external")
        with pytest.raises(ValueError, match="external_command"):
            build_model(config, 4)

    def test_unknown_name(self):
        config = RunConfig()
        object.__setattr__(config, "gfm", "bogus")
        with pytest.raises(ValueError, match="unknown gfm"):
            build_model(config, 4)


@pytest.fixture(scope="module")
def fast_result():
    return run_pipeline(SMALL, FAST)


class TestRunPipeline:
    def test_record_shape(self, fast_result):
        result = fast_result
        assert result.failures == []
        # every series x method x explainer x metric combination scored
        assert len(result.records) == 4 * 2 * 2 * 2
        assert result.series_ids == tuple(s.id for s in SMALL.series)
        seen = {(r.series_id, r.method, r.explainer, r.metric)
                for r in result.records}
        assert len(seen) == len(result.records)

    def test_aggregate_rows_cover_all_groups(self, fast_result):
        rows = fast_result.aggregate_rows
        assert len(rows) == 2 * 2 * 2 * 2  # groups x (mean, median)
        keys = [(r.explainer, r.method, r.metric) for r in rows]
        assert keys == sorted(keys)
        assert [r.statistic for r in rows[:2]] == ["mean", "median"]
        assert all(r.n_series == 4 for r in rows)
        assert all(set(r.values) == set(MEASURE_NAMES) for r in rows)

    def test_forecast_maps_populated(self, fast_result):
        result = fast_result
        for sid in result.series_ids:
            assert result.trains[sid].shape == (40,)
            assert result.actuals[sid].shape == (4,)
            assert result.global_forecasts[sid].shape == (4,)
            for kind in ("theta", "ar"):
                assert result.local_forecasts[(sid, kind)].shape == (4,)
                for method in ("nf", "nstl"):
                    assert result.explainer_forecasts[(sid, method, kind)].shape == (4,)
                    assert (sid, method, kind) in result.explanations

    def test_oracle_nf_has_exact_local_fidelity(self):
        # the stub's one-step fit is the training region itself, so the
        # neighbourhood member equals the benchmark input and both sides of
        # the comparison are the same model
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("theta", "ar"), metrics=("mase", "rmse"))
        result = run_pipeline(SMALL, config)
        assert result.failures == []
        assert len(result.records) == 4 * 2 * 2
        for record in result.records:
            assert record.errors.e_global_explainer == record.errors.e_global_local
            assert record.measures.fidelity_local == 0.0

    def test_pooled_ar_end_to_end(self):
        config = RunConfig(methods=("nf",), explainers=("ar",),
                           metrics=("rmse",), seed=2)
        # the second harmonic of period 4 has an identically-zero sine
        # column, so the pooled fit falls back to ridge (and says so)
        with pytest.warns(SingularDesignWarning):
            result = run_pipeline(SMALL, config)
        assert result.failures == []
        assert len(result.records) == 4
        error_fields = ("e_global_explainer", "e_actual_global",
                        "e_actual_local", "e_global_local",
                        "e_actual_explainer", "e_local_explainer")
        for record in result.records:
            for name in error_fields:
                assert np.isfinite(getattr(record.errors, name))

    def test_all_methods_succeed(self):
        config = RunConfig(gfm="oracle_stub", methods=("nf", "nstl", "nsieve"),
                           explainers=("theta",), metrics=("rmse",),
                           n_members=4, seed=3)
        result = run_pipeline(SMALL, config)
        assert result.failures == []
        assert len(result.records) == 4 * 3

    def test_unfittable_combination_recorded_not_fatal(self):
        # pooled regression needs several members, so it cannot explain a
        # single-member neighbourhood; the run must carry on with theta
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("pr", "theta"), metrics=("rmse",))
        result = run_pipeline(SMALL, config)
        assert len(result.failures) == 4
        for failure in result.failures:
            assert failure.stage == "explainer"
            assert failure.explainer == "pr"
            assert "N > 1" in failure.message
        assert {r.explainer for r in result.records} == {"theta"}
        assert len(result.records) == 4

    def test_metric_failure_recorded_per_metric(self):
        # constant training region has no seasonal-difference scale, so the
        # scaled error is undefined while squared error still works
        flat = make_set(
            make_series([5.0] * 22, sid="FLAT", horizon=2),
            make_series(np.linspace(1, 30, 22), sid="RAMP", horizon=2),
        )
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("theta",), metrics=("mase", "rmse"))
        result = run_pipeline(flat, config)
        stages = {(f.series_id, f.stage) for f in result.failures}
        assert stages == {("FLAT", "metric:mase")}
        recorded = {(r.series_id, r.metric) for r in result.records}
        assert recorded == {("FLAT", "rmse"), ("RAMP", "mase"), ("RAMP", "rmse")}

    def test_horizon_override(self):
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("theta",), metrics=("rmse",), horizon=2)
        result = run_pipeline(SMALL, config)
        for sid in result.series_ids:
            assert result.actuals[sid].shape == (2,)
            assert result.trains[sid].shape == (42,)
            assert result.global_forecasts[sid].shape == (2,)

    def test_horizon_override_validated(self):
        config = RunConfig(gfm="oracle_stub", horizon=60)
        with pytest.raises(ValidationError):
            run_pipeline(SMALL, config)

    def test_prefitted_model_reused(self):
        model = OracleForecaster()
        model.fit(train_region_set(SMALL))
        config = RunConfig(gfm="pooled_ar", methods=("nf",),
                           explainers=("theta",), metrics=("rmse",))
        result = run_pipeline(SMALL, config, model=model)
        for sid, train in result.trains.items():
            np.testing.assert_allclose(result.global_forecasts[sid],
                                       np.repeat(train[-1], 4))

    def test_same_seed_reproduces_bundle(self, tmp_path):
        first = tmp_path / "a"
        second = tmp_path / "b"
        write_report(run_pipeline(SMALL, FAST), first)
        write_report(run_pipeline(SMALL, FAST), second)
        assert tree_bytes(first) == tree_bytes(second)

    def test_thread_count_does_not_change_bundle(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOMEF_THREADS", "1")
        serial = run_pipeline(SMALL, FAST)
        monkeypatch.setenv("LOMEF_THREADS", "3")
        threaded = run_pipeline(SMALL, FAST)
        first = tmp_path / "serial"
        second = tmp_path / "threaded"
        write_report(serial, first)
        write_report(threaded, second)
        assert tree_bytes(first) == tree_bytes(second)


class TestRunStability:
    def test_too_few_runs(self):
        with pytest.raises(TooFewRuns):
            run_stability(SMALL, RunConfig(gfm="oracle_stub"), n_runs=1)

    def test_deterministic_method_has_zero_spread(self):
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("theta",), metrics=("mase", "rmse"),
                           seed=5)
        result = run_stability(SMALL, config, n_runs=3)
        assert result.n_runs == 3
        assert len(result.rows) == 2
        for row in result.rows:
            assert row.n_runs == 3
            assert row.iqr == 0.0
        for medians in result.run_medians.values():
            assert len(medians) == 3
            assert len(set(medians)) == 1

    def test_rows_sorted_and_resampled_methods_spread(self):
        config = RunConfig(gfm="oracle_stub", methods=("nf", "nstl"),
                           explainers=("theta",), metrics=("rmse",),
                           n_members=4, seed=6)
        result = run_stability(SMALL, config, n_runs=3)
        keys = [(r.explainer, r.method, r.metric) for r in result.rows]
        assert keys == [("theta", "nf", "rmse"), ("theta", "nstl", "rmse")]
        nf_row, nstl_row = result.rows
        assert nf_row.iqr == 0.0
        assert np.isfinite(nstl_row.iqr) and nstl_row.iqr >= 0.0

    def test_write_stability_file(self, tmp_path):
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("theta",), metrics=("rmse",), seed=7)
        result = run_stability(SMALL, config, n_runs=2)
        path = write_stability(result, tmp_path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert path.name == "stability.csv"
        assert lines[0] == "explainer,method,metric,n_runs,iqr"
        assert lines[1] == "theta,nf,rmse,2,0"


BUNDLE_CONFIG = RunConfig(
    gfm="oracle_stub",
    methods=("nf", "nstl"),
    explainers=("theta", "stl_ets"),
    metrics=("rmse",),
    n_members=4,
    seed=8,
)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    result = run_pipeline(SMALL, BUNDLE_CONFIG)
    out = tmp_path_factory.mktemp("bundle")
    write_report(result, out)
    return result, out


class TestReportBundle:
    def test_file_set(self, bundle):
        result, out = bundle
        names = {p.name for p in out.iterdir()}
        assert names == {"records.csv", "aggregate.csv", "forecasts.csv",
                         "failures.csv", "explanations"}
        details = sorted(p.name for p in (out / "explanations").iterdir())
        assert len(details) == 4 * 2 * 2
        assert details[0].endswith(".json")

    def test_records_csv(self, bundle):
        result, out = bundle
        lines = (out / "records.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(result.records) + 1
        header = lines[0].split(",")
        assert header[:4] == ["series_id", "explainer", "method", "metric"]
        assert header[4] == "e_global_explainer"
        assert header[-6:] == list(MEASURE_NAMES)
        first = lines[1].split(",")
        record = result.records[0]
        assert first[0] == record.series_id
        assert first[4] == f"{record.errors.e_global_explainer:.6g}"

    def test_aggregate_csv(self, bundle):
        result, out = bundle
        lines = (out / "aggregate.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(result.aggregate_rows) + 1
        header = lines[0].split(",")
        assert header[:5] == ["explainer", "method", "metric", "statistic",
                              "n_series"]
        assert header[5:8] == ["Fidelity_Actual", "Fidelity_Actual_p",
                               "Fidelity_Actual_significant"]
        assert lines[1].split(",")[3] == "mean"
        assert lines[2].split(",")[3] == "median"

    def test_forecasts_roundtrip(self, bundle):
        result, out = bundle
        series = read_bundle_forecasts(out)
        assert set(series) == set(result.series_ids)
        for sid in result.series_ids:
            entry = series[sid]
            np.testing.assert_allclose(entry.train, result.trains[sid],
                                       rtol=2e-6)
            np.testing.assert_allclose(entry.actual, result.actuals[sid],
                                       rtol=2e-6)
            np.testing.assert_allclose(entry.global_forecast,
                                       result.global_forecasts[sid], rtol=2e-6)
            assert set(entry.local) == {"theta", "stl_ets"}
            assert set(entry.explainer) == {
                (m, k) for m in ("nf", "nstl") for k in ("theta", "stl_ets")
            }
            np.testing.assert_allclose(
                entry.explainer[("nstl", "theta")],
                result.explainer_forecasts[(sid, "nstl", "theta")],
                rtol=2e-6,
            )

    def test_explanations_roundtrip(self, bundle):
        result, out = bundle
        docs = read_bundle_explanations(out)
        assert set(docs) == set(result.explanations)
        sid = result.series_ids[0]
        theta = docs[(sid, "nstl", "theta")]
        assert theta["horizon"] == 4
        assert theta["n_members"] == 4
        assert theta["chosen_forms"] is None
        names = [row["name"] for row in theta["coefficients"]]
        assert "alpha" in names and "drift" in names
        low = np.array(theta["forecast_low"])
        high = np.array(theta["forecast_high"])
        mid = np.array(theta["forecast"])
        assert np.all(low <= mid + 1e-12) and np.all(mid <= high + 1e-12)

        ets = docs[(sid, "nstl", "stl_ets")]
        assert sum(ets["chosen_forms"].values()) == 4
        assert ets["components"] is not None
        assert ets["components"]["periods"] == [4]
        # component tracks cover the training window
        assert len(ets["components"]["trend"]) == 40
        assert len(ets["components"]["seasonal"]) == 1
        assert len(ets["components"]["seasonal"][0]) == 40
        assert len(ets["components"]["remainder"]) == 40

        nf = docs[(sid, "nf", "theta")]
        assert nf["n_members"] == 1
        np.testing.assert_allclose(nf["forecast_low"], nf["forecast_high"])

    def test_explanation_to_dict_matches_files(self, bundle):
        result, out = bundle
        sid = result.series_ids[0]
        fitted = result.explanations[(sid, "nstl", "theta")]
        doc = explanation_to_dict(sid, "nstl", fitted)
        assert doc == read_bundle_explanations(out)[(sid, "nstl", "theta")]

    def test_rewrite_is_byte_identical(self, bundle, tmp_path):
        result, out = bundle
        again = tmp_path / "again"
        write_report(result, again)
        assert tree_bytes(out) == tree_bytes(again)

    def test_bundle_without_records_still_written(self, tmp_path):
        config = RunConfig(gfm="oracle_stub", methods=("nf",),
                           explainers=("pr",), metrics=("rmse",))
        result = run_pipeline(SMALL, config)
        assert result.records == [] and result.aggregate_rows == []
        write_report(result, tmp_path)
        records = (tmp_path / "records.csv").read_text(encoding="utf-8")
        assert len(records.splitlines()) == 1
        failures = (tmp_path / "failures.csv").read_text(encoding="utf-8")
        assert len(failures.splitlines()) == 1 + 4
        assert read_bundle_explanations(tmp_path) == {}
        # forecasts are still useful without an explainer: train/actual/global
        series = read_bundle_forecasts(tmp_path)
        assert set(series) == set(result.series_ids)
        assert all(s.explainer == {} for s in series.values())
