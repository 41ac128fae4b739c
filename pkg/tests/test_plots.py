"""SVG chart rendering and chart/CSV companions."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from lomef.dataio import synthetic_series_set
from lomef.explainers import CoefficientRow, ComponentTracks
from lomef.pipeline import RunConfig, run_pipeline, write_report
from lomef.plots import (
    plot_bundle,
    plot_coefficients,
    plot_components,
    plot_forecast,
    write_plots,
)

SVG = "{http://www.w3.org/2000/svg}"


def parse_svg(text: str) -> ET.Element:
    return ET.fromstring(text)


def elements(root: ET.Element, tag: str) -> list[ET.Element]:
    return list(root.iter(SVG + tag))


def texts(root: ET.Element) -> list[str]:
    return [el.text or "" for el in elements(root, "text")]


class TestPlotForecast:
    def setup_method(self):
        self.svg = plot_forecast(
            "S001: theta explainer on nstl",
            actual=[10.0, 11.0, 12.0, 13.0],
            global_forecast=[10.5, 11.5, 12.5, 13.5],
            local_forecast=[9.5, 10.5, 11.5, 12.5],
            explainer_forecast=[10.1, 11.1, 12.1, 13.1],
        )

    def test_well_formed_with_four_lines(self):
        root = parse_svg(self.svg)
        assert len(elements(root, "polyline")) == 4

    def test_legend_names_all_four_lines(self):
        labels = texts(parse_svg(self.svg))
        for expected in ("actual", "global model", "local benchmark",
                         "explainer (bagged)"):
            assert expected in labels

    def test_title_shown(self):
        assert "S001: theta explainer on nstl" in texts(parse_svg(self.svg))

    def test_degenerate_ranges_still_render(self):
        flat = plot_forecast("flat", [5.0], [5.0], [5.0], [5.0])
        root = parse_svg(flat)
        assert len(elements(root, "polyline")) == 4


def make_tracks(n=12, periods=(4,)):
    rng = np.random.default_rng(0)
    mid = rng.normal(size=n)

    def triple():
        base = rng.normal(size=n)
        return base, base - 0.5, base + 0.5

    trend, trend_low, trend_high = triple()
    seasonal, seasonal_low, seasonal_high = [], [], []
    for _ in periods:
        s, lo, hi = triple()
        seasonal.append(s)
        seasonal_low.append(lo)
        seasonal_high.append(hi)
    remainder, remainder_low, remainder_high = triple()
    return ComponentTracks(
        periods=tuple(periods),
        trend=trend, trend_low=trend_low, trend_high=trend_high,
        seasonal=tuple(seasonal), seasonal_low=tuple(seasonal_low),
        seasonal_high=tuple(seasonal_high),
        remainder=remainder, remainder_low=remainder_low,
        remainder_high=remainder_high,
    )


class TestPlotComponents:
    def test_three_panels_for_single_period(self):
        root = parse_svg(plot_components("decomp", make_tracks(periods=(4,))))
        assert len(elements(root, "polyline")) == 3  # trend, seasonal, remainder
        assert len(elements(root, "polygon")) == 3  # one envelope per panel
        panel_labels = texts(root)
        assert "trend" in panel_labels
        assert "seasonal (period 4)" in panel_labels
        assert "remainder" in panel_labels

    def test_panel_per_period(self):
        root = parse_svg(plot_components("decomp", make_tracks(periods=(4, 12))))
        assert len(elements(root, "polyline")) == 4
        assert "seasonal (period 12)" in texts(root)

    def test_subtitle_states_training_window(self):
        root = parse_svg(plot_components("decomp", make_tracks()))
        assert any("training window" in t for t in texts(root))


ROWS = (
    CoefficientRow(name="lag_1", value=0.8, std_error=0.05, significant=True),
    CoefficientRow(name="lag_2", value=-0.4, std_error=0.06, significant=True),
    CoefficientRow(name="lag_3", value=0.01, std_error=0.2, significant=False),
)


def bar_rects(root: ET.Element) -> list[ET.Element]:
    return [r for r in elements(root, "rect") if r.get("fill") == "#1f77b4"]


class TestPlotCoefficients:
    def test_one_bar_per_significant_row(self):
        root = parse_svg(plot_coefficients("coefs", ROWS))
        assert len(bar_rects(root)) == 2
        labels = texts(root)
        assert "lag_1" in labels and "lag_2" in labels
        assert "lag_3" not in labels

    def test_negative_bars_extend_left_of_zero(self):
        root = parse_svg(plot_coefficients("coefs", ROWS))
        zero_x = float(elements(root, "line")[0].get("x1"))
        positive, negative = bar_rects(root)
        assert float(positive.get("x")) == pytest.approx(zero_x)
        end = float(negative.get("x")) + float(negative.get("width"))
        assert end == pytest.approx(zero_x)

    def test_empty_chart_notes_absence(self):
        insignificant = tuple(
            CoefficientRow(r.name, r.value, r.std_error, False) for r in ROWS
        )
        root = parse_svg(plot_coefficients("coefs", insignificant))
        assert len(bar_rects(root)) == 0
        assert "no significant coefficients" in texts(root)


DATA = synthetic_series_set(n_series=3, length=44, horizon=4,
                            seasonal_periods=(4,), seed=0)
CONFIG = RunConfig(
    gfm="oracle_stub",
    methods=("nf", "nstl"),
    explainers=("theta", "stl_ets"),
    metrics=("rmse",),
    n_members=4,
    seed=8,
)


@pytest.fixture(scope="module")
def result():
    return run_pipeline(DATA, CONFIG)


@pytest.fixture(scope="module")
def plots_dir(result, tmp_path_factory):
    out = tmp_path_factory.mktemp("plots")
    written = write_plots(result, out)
    return out, written


def tree_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestWritePlots:
    def test_expected_file_set(self, result, plots_dir):
        out, written = plots_dir
        names = {p.name for p in out.iterdir()}
        assert {p.name for p in written} == names
        expected = set()
        for sid in result.series_ids:
            for method in ("nf", "nstl"):
                for kind in ("theta", "stl_ets"):
                    stem = f"{sid}__{method}__{kind}"
                    expected |= {f"forecast_{stem}.svg", f"forecast_{stem}.csv"}
                    if kind == "stl_ets":
                        expected |= {f"components_{stem}.svg",
                                     f"components_{stem}.csv"}
                    else:  # theta explains through its coefficients
                        expected |= {f"coefficients_{stem}.svg",
                                     f"coefficients_{stem}.csv"}
        assert names == expected

    def test_forecast_companion_contents(self, result, plots_dir):
        out, _ = plots_dir
        sid = result.series_ids[0]
        lines = (out / f"forecast_{sid}__nstl__theta.csv").read_text(
            encoding="utf-8"
        ).splitlines()
        assert lines[0] == "step,actual,global,local,explainer"
        assert len(lines) == 1 + 4
        table = np.array([[float(c) for c in line.split(",")]
                          for line in lines[1:]])
        np.testing.assert_array_equal(table[:, 0], [1, 2, 3, 4])
        np.testing.assert_allclose(table[:, 1], result.actuals[sid], rtol=2e-6)
        np.testing.assert_allclose(table[:, 2], result.global_forecasts[sid],
                                   rtol=2e-6)
        np.testing.assert_allclose(table[:, 3],
                                   result.local_forecasts[(sid, "theta")],
                                   rtol=2e-6)
        np.testing.assert_allclose(
            table[:, 4], result.explainer_forecasts[(sid, "nstl", "theta")],
            rtol=2e-6)

    def test_coefficients_companion_lists_all_rows(self, result, plots_dir):
        out, _ = plots_dir
        sid = result.series_ids[0]
        rows = result.explanations[(sid, "nstl", "theta")].payload.coefficients
        lines = (out / f"coefficients_{sid}__nstl__theta.csv").read_text(
            encoding="utf-8"
        ).splitlines()
        assert lines[0] == "name,value,std_error,significant"
        assert len(lines) == 1 + len(rows)
        names = [line.split(",")[0] for line in lines[1:]]
        assert names == [r.name for r in rows]
        flags = [line.split(",")[3] for line in lines[1:]]
        assert set(flags) <= {"true", "false"}

    def test_components_companion_covers_training_window(self, result,
                                                         plots_dir):
        out, _ = plots_dir
        sid = result.series_ids[0]
        lines = (out / f"components_{sid}__nstl__stl_ets.csv").read_text(
            encoding="utf-8"
        ).splitlines()
        assert lines[0] == (
            "index,trend,trend_low,trend_high,"
            "seasonal_4,seasonal_4_low,seasonal_4_high,"
            "remainder,remainder_low,remainder_high"
        )
        assert len(lines) == 1 + 40
        tracks = result.explanations[(sid, "nstl", "stl_ets")].payload.components
        first = [float(c) for c in lines[1].split(",")]
        assert first[0] == 1
        assert first[1] == pytest.approx(float(tracks.trend[0]), rel=2e-6)

    def test_series_filter(self, result, tmp_path):
        sid = result.series_ids[1]
        written = write_plots(result, tmp_path, series_ids=[sid])
        assert written
        assert all(p.name.split("_", 1)[1].startswith(sid) for p in written)

    def test_method_and_explainer_filters(self, result, tmp_path):
        written = write_plots(result, tmp_path, methods=["nf"],
                              explainers=["theta"])
        names = {p.name for p in written}
        assert names == {
            f"{prefix}_{sid}__nf__theta.{ext}"
            for sid in result.series_ids
            for prefix, ext in (("forecast", "svg"), ("forecast", "csv"),
                                ("coefficients", "svg"), ("coefficients", "csv"))
        }

    def test_all_svgs_parse(self, plots_dir):
        out, written = plots_dir
        for path in written:
            if path.suffix == ".svg":
                parse_svg(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def run_dir(result, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    write_report(result, out)
    return out


FLOAT = re.compile(r"-?\d+\.?\d*(?:e-?\d+)?")


def skeleton_and_numbers(text: str):
    return FLOAT.sub("#", text), [float(m) for m in FLOAT.findall(text)]


class TestPlotBundle:
    def test_matches_direct_rendering(self, result, run_dir, tmp_path):
        from_bundle = plot_bundle(run_dir)
        assert from_bundle and all(p.parent == run_dir / "plots"
                                   for p in from_bundle)
        direct = tmp_path / "direct"
        write_plots(result, direct)
        rebuilt = tree_bytes(run_dir / "plots")
        expected = tree_bytes(direct)
        assert set(rebuilt) == set(expected)
        for name in expected:
            if name.endswith(".csv"):
                # the 6-significant-digit cell format is idempotent, so
                # companions rebuilt from the bundle are byte-identical
                assert rebuilt[name] == expected[name], name
            else:
                # pixel coordinates may drift within the bundle's stored
                # precision; the drawing structure must be unchanged
                shape_a, nums_a = skeleton_and_numbers(
                    rebuilt[name].decode("utf-8"))
                shape_b, nums_b = skeleton_and_numbers(
                    expected[name].decode("utf-8"))
                assert shape_a == shape_b, name
                np.testing.assert_allclose(nums_a, nums_b, atol=0.1,
                                           rtol=1e-4, err_msg=name)

    def test_custom_out_dir_and_filters(self, run_dir, tmp_path):
        out = tmp_path / "filtered"
        written = plot_bundle(run_dir, out_dir=out, explainers=["stl_ets"])
        assert all(p.parent == out for p in written)
        names = {p.name for p in written}
        assert names and all("theta" not in n for n in names)
        assert any(n.startswith("components_") for n in names)
