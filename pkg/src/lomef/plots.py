"""Plain-SVG visualisations of explanations, with CSV companions.

Charts are emitted as self-contained SVG text with no external assets and
no timestamps, so a plot is a pure function of the numbers it shows.  Every
chart gets a CSV companion holding exactly the plotted values, for readers
who want the data rather than the picture.

Three chart types:

- forecast comparison: actuals, the global model's forecast, the local
  benchmark and the (bagged) explainer forecast over the test window
  (four lines, four legend entries);
- component tracks: trend / seasonal / remainder means across the
  neighbourhood with min-max envelopes (training window only, as the
  decomposition is defined on the training region);
- coefficient bars: one bar per *significant* aggregated coefficient
  (mean magnitude above twice its spread); the companion CSV lists all
  coefficients.

Charts can be rendered straight from a :class:`~lomef.pipeline.RunResult`
(:func:`write_plots`) or re-built from a written report bundle
(:func:`plot_bundle`), which is what the command-line ``plot`` subcommand
does.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .explainers import CoefficientRow, ComponentTracks
from .pipeline import (
    RunResult,
    _fmt,
    _safe_name,
    _write_lines,
    read_bundle_explanations,
    read_bundle_forecasts,
)

__all__ = [
    "plot_forecast",
    "plot_components",
    "plot_coefficients",
    "write_plots",
    "plot_bundle",
]

_COLORS = {
    "actual": "#222222",
    "global": "#d62728",
    "local": "#1f77b4",
    "explainer": "#2ca02c",
    "band": "#2ca02c",
}


# ---------------------------------------------------------------------------
# low-level SVG helpers
# ---------------------------------------------------------------------------


def _svg_open(width: int, height: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}"'
        f' height="{height}" viewBox="0 0 {width} {height}"'
        ' font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _text(x: float, y: float, content: str, anchor: str = "start",
          size: int = 11, color: str = "#000000") -> str:
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}"'
        f' font-size="{size}" fill="{color}">{_escape(content)}</text>'
    )


class _Frame:
    """Maps (x, y) data coordinates onto one rectangular chart panel."""

    def __init__(self, left, top, width, height, x_min, x_max, y_min, y_max):
        self.left, self.top = left, top
        self.width, self.height = width, height
        self.x_min, self.x_max = x_min, x_max
        self.y_min, self.y_max = y_min, y_max

    def x(self, value: float) -> float:
        span = self.x_max - self.x_min or 1.0
        return self.left + (value - self.x_min) / span * self.width

    def y(self, value: float) -> float:
        span = self.y_max - self.y_min or 1.0
        return self.top + self.height - (value - self.y_min) / span * self.height

    def polyline(self, xs, ys, color: str, width: float = 1.5,
                 dash: str | None = None) -> str:
        points = " ".join(
            f"{self.x(float(a)):.2f},{self.y(float(b)):.2f}"
            for a, b in zip(xs, ys)
        )
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        return (
            f'<polyline points="{points}" fill="none" stroke="{color}"'
            f' stroke-width="{width}"{dash_attr}/>'
        )

    def band(self, xs, low, high, color: str) -> str:
        forward = [
            f"{self.x(float(a)):.2f},{self.y(float(b)):.2f}"
            for a, b in zip(xs, high)
        ]
        backward = [
            f"{self.x(float(a)):.2f},{self.y(float(b)):.2f}"
            for a, b in zip(reversed(list(xs)), reversed(list(low)))
        ]
        points = " ".join(forward + backward)
        return f'<polygon points="{points}" fill="{color}" fill-opacity="0.18"/>'

    def box(self) -> str:
        return (
            f'<rect x="{self.left:.1f}" y="{self.top:.1f}"'
            f' width="{self.width:.1f}" height="{self.height:.1f}"'
            ' fill="none" stroke="#999999"/>'
        )

    def axis_labels(self) -> list[str]:
        return [
            _text(self.left - 4, self.y(self.y_min) + 4, _fmt(self.y_min),
                  anchor="end", size=9, color="#555555"),
            _text(self.left - 4, self.y(self.y_max) + 4, _fmt(self.y_max),
                  anchor="end", size=9, color="#555555"),
            _text(self.x(self.x_min), self.top + self.height + 12,
                  _fmt(self.x_min), anchor="middle", size=9, color="#555555"),
            _text(self.x(self.x_max), self.top + self.height + 12,
                  _fmt(self.x_max), anchor="middle", size=9, color="#555555"),
        ]


def _frame_for(left, top, width, height, xs, ys_list) -> _Frame:
    finite = np.concatenate([np.asarray(y, dtype=float) for y in ys_list])
    finite = finite[np.isfinite(finite)]
    if finite.size == 0:
        lo, hi = 0.0, 1.0
    else:
        lo, hi = float(finite.min()), float(finite.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        else:
            pad = 0.05 * (hi - lo)
            lo, hi = lo - pad, hi + pad
    xs = np.asarray(xs, dtype=float)
    return _Frame(left, top, width, height, float(xs.min()), float(xs.max()),
                  lo, hi)


def _legend(entries, x: float, y: float) -> list[str]:
    parts = []
    for index, (label, color) in enumerate(entries):
        ly = y + 14 * index
        parts.append(
            f'<rect x="{x:.1f}" y="{ly - 8:.1f}" width="12" height="4"'
            f' fill="{color}"/>'
        )
        parts.append(_text(x + 18, ly - 2, label, size=10))
    return parts


# ---------------------------------------------------------------------------
# chart builders
# ---------------------------------------------------------------------------


def plot_forecast(
    title: str,
    actual,
    global_forecast,
    local_forecast,
    explainer_forecast,
) -> str:
    """Forecast-comparison chart: four lines over the test window."""
    actual = np.asarray(actual, dtype=float)
    h = actual.shape[0]
    xs = np.arange(1, h + 1)

    width, height = 720, 320
    frame = _frame_for(
        55, 40, width - 230, height - 80, xs,
        [actual, global_forecast, local_forecast, explainer_forecast],
    )
    parts = _svg_open(width, height)
    parts.append(_text(width / 2, 20, title, anchor="middle", size=13))
    parts.append(frame.box())
    parts.append(frame.polyline(xs, actual, _COLORS["actual"], 1.6))
    parts.append(frame.polyline(xs, global_forecast, _COLORS["global"], 1.6))
    parts.append(
        frame.polyline(xs, local_forecast, _COLORS["local"], 1.4, dash="5,3")
    )
    parts.append(
        frame.polyline(xs, explainer_forecast, _COLORS["explainer"], 1.8)
    )
    parts.extend(frame.axis_labels())
    parts.extend(
        _legend(
            [
                ("actual", _COLORS["actual"]),
                ("global model", _COLORS["global"]),
                ("local benchmark", _COLORS["local"]),
                ("explainer (bagged)", _COLORS["explainer"]),
            ],
            width - 160,
            55,
        )
    )
    parts.append("</svg>")
    return "\n".join(parts)


def plot_components(title: str, tracks: ComponentTracks) -> str:
    """Stacked trend / seasonal / remainder panels with min-max envelopes.

    The tracks live on the training window (decompositions are in-sample),
    which the subtitle states explicitly.
    """
    panels: list[tuple[str, np.ndarray, np.ndarray, np.ndarray]] = [
        ("trend", np.asarray(tracks.trend), np.asarray(tracks.trend_low),
         np.asarray(tracks.trend_high)),
    ]
    for period, mid, low, high in zip(
        tracks.periods, tracks.seasonal, tracks.seasonal_low,
        tracks.seasonal_high,
    ):
        panels.append(
            (f"seasonal (period {period})", np.asarray(mid), np.asarray(low),
             np.asarray(high))
        )
    panels.append(
        ("remainder", np.asarray(tracks.remainder),
         np.asarray(tracks.remainder_low), np.asarray(tracks.remainder_high))
    )

    panel_h, width = 120, 760
    height = 50 + len(panels) * (panel_h + 30)
    parts = _svg_open(width, height)
    parts.append(_text(width / 2, 18, title, anchor="middle", size=13))
    parts.append(
        _text(width / 2, 34,
              "neighbourhood mean with min-max envelope, training window",
              anchor="middle", size=10, color="#555555")
    )
    xs = np.arange(1, panels[0][1].shape[0] + 1)
    for index, (label, mid, low, high) in enumerate(panels):
        top = 50 + index * (panel_h + 30)
        frame = _frame_for(55, top, width - 110, panel_h, xs, [low, high])
        parts.append(frame.box())
        parts.append(frame.band(xs, low, high, _COLORS["band"]))
        parts.append(frame.polyline(xs, mid, _COLORS["explainer"], 1.5))
        parts.extend(frame.axis_labels())
        parts.append(_text(60, top - 4, label, size=11, color="#333333"))
    parts.append("</svg>")
    return "\n".join(parts)


def plot_coefficients(title: str, rows: tuple[CoefficientRow, ...]) -> str:
    """Horizontal bars, one per significant coefficient.

    Insignificant coefficients are listed in the companion CSV but not
    drawn; when nothing is significant the chart says so.
    """
    shown = [row for row in rows if row.significant]
    width = 620
    bar_h, gap = 16, 8
    left, top = 150, 40
    chart_w = width - left - 90
    height = top + max(len(shown), 1) * (bar_h + gap) + 30
    largest = max((abs(r.value) for r in shown), default=1.0) or 1.0

    parts = _svg_open(width, int(height))
    parts.append(_text(width / 2, 20, title, anchor="middle", size=13))
    if not shown:
        parts.append(
            _text(width / 2, top + bar_h, "no significant coefficients",
                  anchor="middle", color="#555555")
        )
        parts.append("</svg>")
        return "\n".join(parts)
    zero_x = left + chart_w / 2
    parts.append(
        f'<line x1="{zero_x:.1f}" y1="{top - 6}" x2="{zero_x:.1f}"'
        f' y2="{height - 24:.1f}" stroke="#bbbbbb"/>'
    )
    for index, row in enumerate(shown):
        y = top + index * (bar_h + gap)
        length = (abs(row.value) / largest) * (chart_w / 2)
        x = zero_x - length if row.value < 0 else zero_x
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.1f}" width="{length:.2f}"'
            f' height="{bar_h}" fill="{_COLORS["local"]}"/>'
        )
        parts.append(_text(left - 8, y + bar_h - 4, row.name, anchor="end"))
        parts.append(
            _text(width - 84, y + bar_h - 4,
                  f"{_fmt(row.value)} (se {_fmt(row.std_error)})", size=9,
                  color="#555555")
        )
    parts.append("</svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# companions
# ---------------------------------------------------------------------------


def _forecast_companion(actual, global_fc, local_fc, explainer_fc) -> list[str]:
    lines = ["step,actual,global,local,explainer"]
    for step in range(np.asarray(actual).shape[0]):
        lines.append(
            ",".join(
                [
                    str(step + 1),
                    _fmt(float(actual[step])),
                    _fmt(float(global_fc[step])),
                    _fmt(float(local_fc[step])),
                    _fmt(float(explainer_fc[step])),
                ]
            )
        )
    return lines


def _components_companion(tracks: ComponentTracks) -> list[str]:
    header = ["index", "trend", "trend_low", "trend_high"]
    for period in tracks.periods:
        header += [
            f"seasonal_{period}", f"seasonal_{period}_low",
            f"seasonal_{period}_high",
        ]
    header += ["remainder", "remainder_low", "remainder_high"]
    lines = [",".join(header)]
    for i in range(len(tracks.trend)):
        cells = [
            str(i + 1),
            _fmt(float(tracks.trend[i])),
            _fmt(float(tracks.trend_low[i])),
            _fmt(float(tracks.trend_high[i])),
        ]
        for s, lo, hi in zip(tracks.seasonal, tracks.seasonal_low,
                             tracks.seasonal_high):
            cells += [_fmt(float(s[i])), _fmt(float(lo[i])), _fmt(float(hi[i]))]
        cells += [
            _fmt(float(tracks.remainder[i])),
            _fmt(float(tracks.remainder_low[i])),
            _fmt(float(tracks.remainder_high[i])),
        ]
        lines.append(",".join(cells))
    return lines


def _coefficients_companion(rows) -> list[str]:
    lines = ["name,value,std_error,significant"]
    for row in rows:
        lines.append(
            ",".join(
                [row.name, _fmt(float(row.value)), _fmt(float(row.std_error)),
                 _fmt(bool(row.significant))]
            )
        )
    return lines


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _wanted(values, selection) -> bool:
    return selection is None or values in selection


def _normalise(selection) -> set | None:
    if selection is None:
        return None
    return {getattr(v, "value", str(v)) for v in selection}


def _emit_one(
    out: Path,
    written: list[Path],
    sid: str,
    method: str,
    kind: str,
    actual,
    global_fc,
    local_fc,
    explainer_fc,
    components: ComponentTracks | None,
    coefficients: tuple[CoefficientRow, ...] | None,
) -> None:
    stem = f"{_safe_name(sid)}__{method}__{kind}"
    title = f"{sid}: {kind} explainer on {method}"

    path = out / f"forecast_{stem}.svg"
    path.write_text(
        plot_forecast(title, actual, global_fc, local_fc, explainer_fc) + "\n",
        encoding="utf-8",
    )
    written.append(path)
    _write_lines(
        out / f"forecast_{stem}.csv",
        _forecast_companion(actual, global_fc, local_fc, explainer_fc),
    )
    written.append(out / f"forecast_{stem}.csv")

    if components is not None:
        path = out / f"components_{stem}.svg"
        path.write_text(
            plot_components(f"{title} - decomposition", components) + "\n",
            encoding="utf-8",
        )
        written.append(path)
        _write_lines(
            out / f"components_{stem}.csv", _components_companion(components)
        )
        written.append(out / f"components_{stem}.csv")

    if coefficients:
        path = out / f"coefficients_{stem}.svg"
        path.write_text(
            plot_coefficients(f"{title} - coefficients", coefficients) + "\n",
            encoding="utf-8",
        )
        written.append(path)
        _write_lines(
            out / f"coefficients_{stem}.csv",
            _coefficients_companion(coefficients),
        )
        written.append(out / f"coefficients_{stem}.csv")


def write_plots(
    result: RunResult,
    out_dir,
    series_ids=None,
    methods=None,
    explainers=None,
) -> list[Path]:
    """Write SVG charts (plus CSV companions) for the selected combinations.

    ``series_ids`` / ``methods`` / ``explainers`` filter what gets drawn;
    None means everything present in the result.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted_series = set(series_ids) if series_ids else None
    wanted_methods = _normalise(methods)
    wanted_kinds = _normalise(explainers)
    written: list[Path] = []

    for sid in result.series_ids:
        if not _wanted(sid, wanted_series) or sid not in result.global_forecasts:
            continue
        for method in result.config.methods:
            if not _wanted(method.value, wanted_methods):
                continue
            for kind in result.config.explainers:
                if not _wanted(kind.value, wanted_kinds):
                    continue
                key = (sid, method.value, kind.value)
                if key not in result.explainer_forecasts:
                    continue
                payload = result.explanations[key].payload
                _emit_one(
                    out,
                    written,
                    sid,
                    method.value,
                    kind.value,
                    result.actuals[sid],
                    result.global_forecasts[sid],
                    result.local_forecasts[(sid, kind.value)],
                    result.explainer_forecasts[key],
                    payload.components,
                    payload.coefficients,
                )
    return written


def _tracks_from_doc(doc: dict) -> ComponentTracks | None:
    raw = doc.get("components")
    if raw is None:
        return None
    return ComponentTracks(
        periods=tuple(raw["periods"]),
        trend=np.array(raw["trend"]),
        trend_low=np.array(raw["trend_low"]),
        trend_high=np.array(raw["trend_high"]),
        seasonal=tuple(np.array(s) for s in raw["seasonal"]),
        seasonal_low=tuple(np.array(s) for s in raw["seasonal_low"]),
        seasonal_high=tuple(np.array(s) for s in raw["seasonal_high"]),
        remainder=np.array(raw["remainder"]),
        remainder_low=np.array(raw["remainder_low"]),
        remainder_high=np.array(raw["remainder_high"]),
    )


def _rows_from_doc(doc: dict) -> tuple[CoefficientRow, ...] | None:
    raw = doc.get("coefficients")
    if raw is None:
        return None
    return tuple(
        CoefficientRow(
            name=row["name"],
            value=row["value"],
            std_error=row["std_error"],
            significant=row["significant"],
        )
        for row in raw
    )


def plot_bundle(
    run_dir,
    out_dir=None,
    series_ids=None,
    methods=None,
    explainers=None,
) -> list[Path]:
    """Re-build charts from a written report bundle (no recomputation).

    Default output directory is ``<run_dir>/plots``.
    """
    run_dir = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else run_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    forecasts = read_bundle_forecasts(run_dir)
    explanations = read_bundle_explanations(run_dir)
    wanted_series = set(series_ids) if series_ids else None
    wanted_methods = _normalise(methods)
    wanted_kinds = _normalise(explainers)
    written: list[Path] = []

    for sid in sorted(forecasts):
        if not _wanted(sid, wanted_series):
            continue
        bundle = forecasts[sid]
        if bundle.global_forecast is None:
            continue
        for (method, kind), explainer_fc in sorted(bundle.explainer.items()):
            if not _wanted(method, wanted_methods):
                continue
            if not _wanted(kind, wanted_kinds) or kind not in bundle.local:
                continue
            doc = explanations.get((sid, method, kind), {})
            _emit_one(
                out,
                written,
                sid,
                method,
                kind,
                bundle.actual,
                bundle.global_forecast,
                bundle.local[kind],
                explainer_fc,
                _tracks_from_doc(doc),
                _rows_from_doc(doc),
            )
    return written
