"""Command-line entry point.

Subcommands: synth (generate a synthetic minute-bar CSV), validate (data
diagnostics), run (the full forecasting pipeline), report (re-aggregate an
existing prediction store), gradcheck (analytic-vs-numeric gradient check).

Configuration is a flat key = value text file with a strict schema; command
line flags override file values.  Nothing reads the clock: every stochastic
path flows from the configured seed, so identical invocations write
identical bytes.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .errors import ConfigError, DataError, NumericError
from .forest import ForestConfig
from .linear import Benchmark
from .lstm import TrainConfig, gradient_check
from .marketdata import (
    CSV_HEADER,
    MIN_USABLE_MINUTES,
    SESSION_END_MINUTE,
    SESSION_MINUTES,
    SESSION_START_MINUTE,
    SynthParams,
    business_days,
    generate_synthetic_day,
    load_minute_bars,
    minute_to_time,
    time_to_minute,
)
from .metrics import (
    aggregate_report,
    compute_daily_metrics,
    render_aggregate_table,
    write_aggregate_report,
    write_daily_metrics,
)
from .rolling import ModelSpec, read_store, run_sample, write_store

__all__ = ["RunConfig", "main", "build_roster", "load_run_config"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs, resolved from file plus flags."""

    input: Optional[str] = None
    synth_days: Optional[int] = None
    start_date: dt.date = dt.date(2020, 1, 2)
    end_date: Optional[dt.date] = None
    seed: int = 0
    workers: int = 1
    out: str = "out"
    models: Tuple[str, ...] = ("naive", "ols-vix", "lstm")
    predictors: Tuple[str, ...] = ("vix",)
    lstm_hidden_dim: int = 8
    lstm_epochs: int = 200
    lstm_learning_rate: float = 0.05
    lstm_sequence_length: int = 5
    lstm_clip_norm: float = 1.0
    lstm_init_scale: float = 0.2
    rf_trees: int = 100
    rf_min_leaf: int = 3
    rf_max_features: Optional[int] = None
    rf_block_length: int = 5
    rf_feature_mode: str = "per-split"
    synth_return_vol: float = 0.0005
    synth_vix_mean: float = 19.5
    synth_vix_vol: float = 0.015
    synth_vix_persistence: float = 0.97
    synth_leverage_corr: float = -0.4

    def __post_init__(self):
        if not self.models:
            raise ConfigError("at least one model is required")
        if not self.predictors:
            raise ConfigError("at least one predictor set is required")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.synth_days is not None and self.synth_days < 0:
            raise ConfigError(f"synth_days must be non-negative, got {self.synth_days}")
        if self.end_date is not None and self.end_date < self.start_date:
            raise ConfigError("end_date precedes start_date")

    def synth_params(self) -> SynthParams:
        if self.synth_days is None:
            raise ConfigError("synthetic generation needs synth_days (or --days)")
        try:
            return SynthParams(
                n_days=self.synth_days,
                seed=self.seed,
                return_vol=self.synth_return_vol,
                vix_mean=self.synth_vix_mean,
                vix_vol=self.synth_vix_vol,
                vix_persistence=self.synth_vix_persistence,
                leverage_corr=self.synth_leverage_corr,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _to_int(text: str) -> int:
    return int(text)


def _to_optional_int(text: str) -> Optional[int]:
    return None if text == "" else int(text)


def _to_float(text: str) -> float:
    return float(text)


def _to_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text)


def _to_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _to_str(text: str) -> str:
    return text


_CONFIG_SCHEMA = {
    "input": _to_str,
    "synth_days": _to_int,
    "start_date": _to_date,
    "end_date": _to_date,
    "seed": _to_int,
    "workers": _to_int,
    "out": _to_str,
    "models": _to_list,
    "predictors": _to_list,
    "lstm_hidden_dim": _to_int,
    "lstm_epochs": _to_int,
    "lstm_learning_rate": _to_float,
    "lstm_sequence_length": _to_int,
    "lstm_clip_norm": _to_float,
    "lstm_init_scale": _to_float,
    "rf_trees": _to_int,
    "rf_min_leaf": _to_int,
    "rf_max_features": _to_optional_int,
    "rf_block_length": _to_int,
    "rf_feature_mode": _to_str,
    "synth_return_vol": _to_float,
    "synth_vix_mean": _to_float,
    "synth_vix_vol": _to_float,
    "synth_vix_persistence": _to_float,
    "synth_leverage_corr": _to_float,
}

assert set(_CONFIG_SCHEMA) == {f.name for f in fields(RunConfig)}


def _parse_config_file(path) -> dict:
    values = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = _CONFIG_SCHEMA[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def load_run_config(config_path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """Resolve a RunConfig: defaults, then the config file, then flags."""
    values = _parse_config_file(config_path) if config_path else {}
    values.update(overrides or {})
    return RunConfig(**values)


def build_roster(config: RunConfig) -> list:
    """Expand model ids into fully configured specs.

    `lstm` and `rf` fan out over the configured predictor sets; `ols` is
    shorthand for all five single-regressor benchmarks.
    """
    train_config = TrainConfig(
        hidden_dim=config.lstm_hidden_dim,
        learning_rate=config.lstm_learning_rate,
        epochs=config.lstm_epochs,
        sequence_length=config.lstm_sequence_length,
        clip_norm=config.lstm_clip_norm,
        init_scale=config.lstm_init_scale,
    )
    forest_config = ForestConfig(
        n_trees=config.rf_trees,
        min_leaf=config.rf_min_leaf,
        max_features=config.rf_max_features,
        block_length=config.rf_block_length,
        feature_mode=config.rf_feature_mode,
    )
    roster = []
    for model_id in config.models:
        if model_id == "naive":
            roster.append(ModelSpec.naive())
        elif model_id == "ols":
            roster.extend(ModelSpec.ols(bench) for bench in Benchmark)
        elif model_id.startswith("ols-"):
            roster.append(ModelSpec.ols(model_id[len("ols-"):]))
        elif model_id == "lstm":
            roster.extend(ModelSpec.lstm(p, train_config) for p in config.predictors)
        elif model_id == "rf":
            roster.extend(ModelSpec.rf(p, forest_config) for p in config.predictors)
        else:
            raise ConfigError(f"unknown model id: {model_id!r}")
    return roster


def _synthetic_days(config: RunConfig) -> list:
    params = config.synth_params()
    dates = business_days(config.start_date, params.n_days)
    return [generate_synthetic_day(params, day) for day in dates]


def _load_days(config: RunConfig) -> list:
    if (config.input is None) == (config.synth_days is None):
        raise ConfigError("exactly one of 'input' and 'synth_days' must be set")
    if config.input is not None:
        days = load_minute_bars(config.input)
        days = [
            d for d in days
            if config.start_date <= d.day
            and (config.end_date is None or d.day <= config.end_date)
        ]
        if not days:
            raise DataError(f"no usable days in {config.input} within the date range")
        return days
    days = _synthetic_days(config)
    if not days:
        raise DataError("synth_days = 0 leaves nothing to run")
    return days


def _write_bars(days, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for series in days:
            for bar in series.bars:
                writer.writerow(
                    [
                        bar.day.isoformat(),
                        minute_to_time(bar.minute),
                        repr(float(bar.spy_price)),
                        repr(float(bar.vix_annual)),
                    ]
                )


def cmd_synth(config: RunConfig, out_path: str) -> int:
    days = _synthetic_days(config)
    _write_bars(days, out_path)
    n_rows = sum(len(series.bars) for series in days)
    print(f"wrote {len(days)} synthetic days ({n_rows} bars) to {out_path}")
    return EXIT_OK


def _scan_bars(path):
    """One diagnostic pass over a bar CSV; collects instead of raising."""
    errors: list = []
    warns: list = []
    counts: dict = {}
    last_minute: dict = {}
    out_of_session = 0
    n_rows = 0
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            warns.append("file is empty")
            return errors, warns, counts, n_rows
        if tuple(h.strip() for h in header) != CSV_HEADER:
            errors.append(f"line 1: expected header {','.join(CSV_HEADER)}")
            return errors, warns, counts, n_rows
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            n_rows += 1
            if len(row) != 4:
                errors.append(f"line {lineno}: expected 4 fields, got {len(row)}")
                continue
            try:
                day = dt.date.fromisoformat(row[0].strip())
                minute = time_to_minute(row[1])
                price = float(row[2])
                vix = float(row[3])
            except ValueError as exc:
                errors.append(f"line {lineno}: {exc}")
                continue
            previous = last_minute.get(day)
            if previous is not None and minute == previous:
                errors.append(f"line {lineno}: duplicate bar {day} {row[1].strip()}")
            elif previous is not None and minute < previous:
                errors.append(f"line {lineno}: non-monotone minutes within {day}")
            last_minute[day] = minute
            if not SESSION_START_MINUTE <= minute <= SESSION_END_MINUTE:
                out_of_session += 1
                continue
            if price <= 0.0:
                errors.append(f"line {lineno}: spy_price must be positive, got {price}")
            if vix < 0.0:
                errors.append(f"line {lineno}: vix must be non-negative, got {vix}")
            counts[day] = counts.get(day, 0) + 1
    if out_of_session:
        warns.append(f"{out_of_session} out-of-session rows (ignored downstream)")
    for day in sorted(counts):
        missing = SESSION_MINUTES - counts[day]
        if counts[day] < MIN_USABLE_MINUTES:
            warns.append(
                f"{day}: only {counts[day]} usable bars (< {MIN_USABLE_MINUTES}); "
                "day would be dropped"
            )
        elif missing > 0:
            warns.append(f"{day}: {missing} missing session minutes")
    return errors, warns, counts, n_rows


def cmd_validate(path: str) -> int:
    errors, warns, counts, n_rows = _scan_bars(path)
    for day in sorted(counts):
        print(f"{day}: {counts[day]} session bars")
    for message in warns:
        print(f"warning: {message}")
    for message in errors:
        print(f"error: {message}")
    print(
        f"{path}: {n_rows} data rows, {len(counts)} days, "
        f"{len(errors)} errors, {len(warns)} warnings"
    )
    return EXIT_OK if not errors else EXIT_DATA


def _emit_reports(records, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_store(records, out_dir / "predictions.csv")
    daily = compute_daily_metrics(records)
    write_daily_metrics(daily, out_dir / "daily_metrics.csv")
    report = aggregate_report(daily)
    write_aggregate_report(report, out_dir / "aggregate_report.csv")
    print(render_aggregate_table(report))


def cmd_run(config: RunConfig) -> int:
    roster = build_roster(config)
    days = _load_days(config)
    records = run_sample(
        days, roster, master_seed=config.seed, workers=config.workers
    )
    out_dir = Path(config.out)
    _emit_reports(records, out_dir)
    print(
        f"\n{len(records)} predictions, {len(days)} days, "
        f"{len(roster)} models -> {out_dir}/"
    )
    return EXIT_OK


def cmd_report(store_path: str, out: str) -> int:
    records = read_store(store_path)
    if not records:
        raise DataError(f"no records in {store_path}")
    _emit_reports(records, Path(out))
    print(f"\nre-aggregated {len(records)} predictions -> {out}/")
    return EXIT_OK


def cmd_gradcheck(instances: int, seed: int, eps: float, tol: float, corrupt: bool) -> int:
    report = gradient_check(
        n_instances=instances, seed=seed, epsilon=eps, tolerance=tol, corrupt=corrupt
    )
    for n, d, length, err in report.instances:
        print(f"n={n} d={d} L={length} max_rel_err={err:.3e}")
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"{verdict}: max relative error {report.max_rel_err:.3e} over "
        f"{len(report.instances)} instances (tolerance {report.tolerance:g}, "
        f"epsilon {report.epsilon:g})"
    )
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minutecast",
        description="Minute-by-minute rolling-window return forecasting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic minute-bar CSV")
    synth.add_argument("--config", help="key = value config file")
    synth.add_argument("--out", default="synthetic_bars.csv", help="output CSV path")
    synth.add_argument("--days", type=int, help="number of days (overrides synth_days)")
    synth.add_argument("--seed", type=int, help="generator seed")

    validate = sub.add_parser("validate", help="diagnose a minute-bar CSV")
    validate.add_argument("path", help="bar CSV to inspect")

    run = sub.add_parser("run", help="run the forecasting pipeline")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--workers", type=int, help="parallel day workers")
    run.add_argument("--out", help="output directory")
    run.add_argument("--models", help="comma list, e.g. naive,ols-vix,lstm,rf")
    run.add_argument("--predictors", help="comma list for lstm/rf: vix,ar1,agg")

    report = sub.add_parser("report", help="re-aggregate an existing prediction store")
    report.add_argument("store", help="predictions.csv produced by run")
    report.add_argument("--out", default="out", help="output directory")

    grad = sub.add_parser("gradcheck", help="check analytic gradients numerically")
    grad.add_argument("--instances", type=int, default=20)
    grad.add_argument("--seed", type=int, default=20240210)
    grad.add_argument("--eps", type=float, default=1e-5)
    grad.add_argument("--tol", type=float, default=1e-4)
    grad.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    return parser


def _run_overrides(args) -> dict:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "models", None) is not None:
        overrides["models"] = _to_list(args.models)
    if getattr(args, "predictors", None) is not None:
        overrides["predictors"] = _to_list(args.predictors)
    if getattr(args, "out", None) is not None and args.command == "run":
        overrides["out"] = args.out
    return overrides


def _dispatch(args) -> int:
    if args.command == "synth":
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.days is not None:
            overrides["synth_days"] = args.days
        config = load_run_config(args.config, overrides)
        return cmd_synth(config, args.out)
    if args.command == "validate":
        return cmd_validate(args.path)
    if args.command == "run":
        config = load_run_config(args.config, _run_overrides(args))
        return cmd_run(config)
    if args.command == "report":
        return cmd_report(args.store, args.out)
    if args.command == "gradcheck":
        return cmd_gradcheck(args.instances, args.seed, args.eps, args.tol, args.corrupt)
    raise ConfigError(f"unknown command: {args.command!r}")  # unreachable


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
