"""Command-line interface.

Subcommands:

- ``lomef validate DATA``: check a data file against the collection
  contract and report every violation.
- ``lomef run CONFIG``: explain every series of the configured dataset
  and write the report bundle (records, aggregates, forecasts, failures,
  explanation JSON) to the configured output directory.
- ``lomef stability CONFIG --runs R``: repeat the run with independent
  seeds and write the per-group spread of explanation errors.
- ``lomef plot RUN_DIR --series ID``: re-draw SVG charts (with CSV
  companions) from a previously written report bundle.

``run`` and ``stability`` take a configuration file of ``key = value``
lines (see :func:`lomef.pipeline.parse_config`); the dataset path and
output directory come from its ``dataset`` and ``out`` keys.

Exit codes: 0 on success; 1 on validation failure (missing or malformed
inputs, contract violations); 2 on pipeline failure (the run itself
errored or produced nothing).  Worker threads are controlled by the
``LOMEF_THREADS`` environment variable; results are reproducible for any
thread count.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .dataio import load_csv
from .exceptions import LomefError, ParseError, PipelineError, ValidationError
from .pipeline import (
    RunConfig,
    parse_config,
    run_pipeline,
    run_stability,
    write_report,
    write_stability,
)
from .plots import plot_bundle

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lomef",
        description="Explain individual forecasts of a global time-series "
        "model with local interpretable surrogates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser(
        "validate", help="check a data file against the collection contract"
    )
    p_validate.add_argument("data", help="series collection CSV")

    p_run = sub.add_parser("run", help="explain all series; write the bundle")
    p_run.add_argument("config", help="run configuration file (key = value)")

    p_stab = sub.add_parser(
        "stability", help="spread of explanation error across re-runs"
    )
    p_stab.add_argument("config", help="run configuration file (key = value)")
    p_stab.add_argument("--runs", type=int, help="number of repetitions")

    p_plot = sub.add_parser(
        "plot", help="draw SVG charts from a written report bundle"
    )
    p_plot.add_argument("run_dir", help="directory holding a report bundle")
    p_plot.add_argument(
        "--series", action="append", help="only these series ids (repeatable)"
    )
    p_plot.add_argument(
        "--method", action="append", help="only these neighbourhood methods"
    )
    p_plot.add_argument(
        "--explainer", action="append", help="only these explainer kinds"
    )
    p_plot.add_argument(
        "--out", help="output directory (default: RUN_DIR/plots)"
    )
    return parser


def _run_inputs(args) -> tuple[RunConfig, object]:
    """Parse the config file and load its dataset; both are input checks."""
    config = parse_config(args.config)
    if config.dataset is None:
        raise ParseError(f"{args.config}: missing required key 'dataset'")
    if config.out is None:
        raise ParseError(f"{args.config}: missing required key 'out'")
    if getattr(args, "runs", None) is not None:
        if args.runs < 2:
            raise ParseError("--runs must be at least 2")
        config = dataclasses.replace(config, n_runs=args.runs)
    return config, load_csv(config.dataset)


def _cmd_validate(args) -> int:
    data = load_csv(args.data)
    periods = ",".join(str(p) for p in data.seasonal_periods) or "none"
    print(
        f"ok: {len(data.series)} series, horizon {data.horizon}, "
        f"seasonal periods {periods}"
    )
    return 0


def _cmd_run(args) -> int:
    config, data = _run_inputs(args)
    try:
        result = run_pipeline(data, config)
        write_report(result, config.out)
    except LomefError as exc:
        raise PipelineError(str(exc)) from exc
    print(
        f"explained {len(result.series_ids)} series: "
        f"{len(result.records)} records, {len(result.failures)} failures"
    )
    print(f"report written to {config.out}")
    if not result.records:
        print("pipeline failure: no combination could be evaluated",
              file=sys.stderr)
        return 2
    return 0


def _cmd_stability(args) -> int:
    config, data = _run_inputs(args)
    try:
        result = run_stability(data, config)
        path = write_stability(result, config.out)
    except LomefError as exc:
        raise PipelineError(str(exc)) from exc
    print(f"{result.n_runs} runs, {len(result.rows)} groups")
    print(f"stability written to {path}")
    if not result.rows:
        print("pipeline failure: no combination could be evaluated",
              file=sys.stderr)
        return 2
    return 0


def _cmd_plot(args) -> int:
    written = plot_bundle(
        args.run_dir,
        out_dir=args.out,
        series_ids=args.series,
        methods=args.method,
        explainers=args.explainer,
    )
    out = args.out or f"{args.run_dir}/plots"
    print(f"wrote {len(written)} files to {out}")
    if not written:
        print("invalid: nothing matched the requested combinations",
              file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "run": _cmd_run,
    "stability": _cmd_stability,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        for violation in exc.violations:
            print(f"invalid: {violation}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 2
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    except LomefError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pipeline failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
