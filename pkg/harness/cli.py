"""
Command-line Module

Single entry point of the pipeline:

    synth -> climatology -> mask -> truth -> benchmark -> validate -> score -> rank, summary

Every stage reads its inputs from and writes its artifacts to the work
directory, then prints one JSON run record on stdout (stage, config hash,
seed, wall time, artifact digests, stage figures). Logs go to stderr.

Exit codes: 0 success, 2 usage, 3 configuration, 4 data, 5 invalid submission.
"""
import argparse
import hashlib
import json
import logging
import math
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from harness.config import Settings, config_hash, load_settings
from harness.exceptions import ConfigurationError, DataError, HarnessError, SubmissionValidationError
from harness.extremes.benchmark import (
    PooledMinimaHistogram, benchmark_cdf, benchmark_predictions, pool_minima, write_histogram,
)
from harness.extremes.min_process import NaMode, complete_neighborhood_mask, extract_truth, minimum_process
from harness.fields.store import (
    read_field, read_truth_csv, read_validation_csv, write_field, write_truth_csv, write_validation_csv,
)
from harness.geometry.grid import Grid, read_grid, write_grid
from harness.geometry.neighbors import build_neighbor_table
from harness.model import RunRecord
from harness.preprocess.climatology import compute_anomaly, estimate_mean, trend_diagnostics, write_trend_report
from harness.preprocess.masking import (
    ValidationIndex, apply_mask, build_mask_schedule, default_alpha_schedule, sample_validation, write_mask_summary,
)
from harness.scoring.leaderboard import (
    SubmissionEntry, format_table, leaderboard, score_submission, truth_values, write_leaderboard_csv,
)
from harness.scoring.submission import validate_submission, write_submission
from harness.scoring.twcrps import weight_vector
from harness.simulation.synthetic import generate, write_ground_truth
from harness.utils.export import write_excel
from harness.utils.logging_config import (
    file_logging_enabled, get_logger, log_level_from_env, set_stage, setup_logging,
)

logger = get_logger(__name__)

STAGES = ["synth", "climatology", "mask", "truth", "benchmark", "validate", "score", "rank", "summary"]

# Artifact names inside the work directory
GRID_CSV = "grid.csv"
RAW_FIELD = "raw.xtfd"
TRUE_MEAN_FIELD = "true_mean.xtfd"
SYNTH_TRUTH_JSON = "synth_truth.json"
MEAN_FIELD = "mean.xtfd"
ANOMALY_FIELD = "anomaly.xtfd"
TREND_CSV = "trend.csv"
TREND_JSON = "trend_summary.json"
MASK_SUMMARY_CSV = "mask_summary.csv"
TRAINING_FIELD = "training.xtfd"
VALIDATION_CSV = "validation_index.csv"
MINIMUM_FIELD = "minimum.xtfd"
TRUTH_CSV = "truth.csv"
BENCHMARK_SUBMISSION = "benchmark.xtsb"
BENCHMARK_HISTOGRAM_CSV = "benchmark_histogram.csv"
LEADERBOARD_CSV = "leaderboard.csv"
OFFICIAL_LEADERBOARD_CSV = "leaderboard_official.csv"
LEADERBOARD_TXT = "leaderboard.txt"
LEADERBOARD_XLSX = "leaderboard.xlsx"
SUMMARY_HISTOGRAM_CSV = "summary_histograms.csv"
WEIGHT_CURVE_CSV = "weight_curve.csv"
SUMMARY_JSON = "summary.json"

BENCHMARK_TEAM = "benchmark"

STAGE_HELP = {
    "synth": "generate a synthetic dataset",
    "climatology": "estimate the mean surface, anomalies and trends",
    "mask": "build the monthly masks, the training field and the validation set",
    "truth": "compute the minimum process and the truth at the validation points",
    "benchmark": "build the pooled-minima benchmark submission",
    "validate": "check a submission file",
    "score": "score one submission",
    "rank": "score and rank several submissions",
    "summary": "write histogram and boxplot data for plotting",
}


class StageContext:
    """Resolved settings plus the bookkeeping of one stage run."""

    def __init__(self, stage: str, settings: Settings, args: argparse.Namespace):
        self.stage = stage
        self.settings = settings
        self.args = args
        self.workdir = Path(settings.paths.workdir)
        self.outputs: Dict[str, Path] = {}
        self.details: Dict[str, object] = {}

    def path(self, name: str) -> Path:
        return self.workdir / name

    def require(self, name: str) -> Path:
        """Path of an input artifact, which must exist."""
        path = self.path(name)
        if not path.exists():
            raise DataError(f"missing input {path}; run the stage that produces it first")
        return path

    def wrote(self, *names: str) -> None:
        for name in names:
            self.outputs[name] = self.path(name)


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def _load_grid(ctx: StageContext) -> Grid:
    return read_grid(ctx.require(GRID_CSV))


def _load_validation(ctx: StageContext, calendar) -> ValidationIndex:
    return ValidationIndex.from_frame(read_validation_csv(ctx.require(VALIDATION_CSV)), calendar)


def _expected_points(ctx: StageContext) -> int:
    return len(read_validation_csv(ctx.require(VALIDATION_CSV)))


def run_synth(ctx: StageContext) -> None:
    settings = ctx.settings
    config = settings.synth.model_copy(update={"seed": settings.seed})
    dataset = generate(config, settings.threads)
    dataset.raw.check_bounds(settings.bounds.temperature_min, settings.bounds.temperature_max, "raw temperature")

    write_grid(dataset.grid, ctx.path(GRID_CSV))
    write_field(dataset.raw, ctx.path(RAW_FIELD))
    write_field(dataset.true_mean.to_field(), ctx.path(TRUE_MEAN_FIELD))
    write_ground_truth(dataset, ctx.path(SYNTH_TRUTH_JSON))
    ctx.wrote(GRID_CSV, RAW_FIELD, TRUE_MEAN_FIELD, SYNTH_TRUTH_JSON)
    ctx.details.update({
        "n_cells": dataset.grid.n_cells,
        "n_days": dataset.raw.n_days,
        "calendar_kind": dataset.raw.calendar.kind.value,
    })


def run_climatology(ctx: StageContext) -> None:
    settings = ctx.settings
    grid = _load_grid(ctx)
    raw = read_field(ctx.require(RAW_FIELD), grid=grid)
    raw.check_bounds(settings.bounds.temperature_min, settings.bounds.temperature_max, "raw temperature")

    mean = estimate_mean(raw, settings.threads)
    anomaly = compute_anomaly(raw, mean)
    anomaly.check_bounds(settings.bounds.anomaly_min, settings.bounds.anomaly_max, "anomaly")
    write_field(mean.to_field(), ctx.path(MEAN_FIELD))
    write_field(anomaly, ctx.path(ANOMALY_FIELD))
    ctx.wrote(MEAN_FIELD, ANOMALY_FIELD)
    ctx.details["estimation_gaps"] = len(mean.gaps())

    try:
        report = trend_diagnostics(anomaly)
    except DataError as e:
        logger.warning(f"Skipping trend diagnostics: {e}")
        return
    write_trend_report(report, ctx.path(TREND_CSV), ctx.path(TREND_JSON))
    ctx.wrote(TREND_CSV, TREND_JSON)
    ctx.details.update({
        "basin_mean_slope_c_per_century": _finite_or_none(report.basin_mean_slope),
        "basin_sd_slope_c_per_century": _finite_or_none(report.basin_sd_slope),
    })


def run_mask(ctx: StageContext) -> None:
    settings = ctx.settings
    grid = _load_grid(ctx)
    anomaly = read_field(ctx.require(ANOMALY_FIELD), grid=grid)
    calendar = anomaly.calendar

    alphas = default_alpha_schedule(
        calendar, settings.mask.alpha_early, settings.mask.alpha_late, settings.mask.split_date,
    )
    schedule = build_mask_schedule(grid, calendar, alphas, settings.mask.cov, settings.seed, settings.threads)
    training = apply_mask(anomaly, schedule)

    period_start = settings.validation.period_start
    if period_start is None:
        split = settings.mask.split_date
        period_start = split if calendar.start_date <= split <= calendar.end_date else calendar.start_date
    index = sample_validation(
        schedule, calendar,
        settings.validation.n_per_day, settings.validation.days_of_month,
        (period_start, settings.validation.period_end),
        settings.seed, settings.validation.reuse_locations_within_month,
    )
    leaked = int(np.isfinite(training.values[index.days - 1, index.cell_ids]).sum())
    if leaked:
        raise DataError(f"{leaked} validation points are observed in the training field")

    write_mask_summary(schedule, ctx.path(MASK_SUMMARY_CSV))
    write_field(training, ctx.path(TRAINING_FIELD))
    write_validation_csv(index.to_frame(calendar), ctx.path(VALIDATION_CSV))
    ctx.wrote(MASK_SUMMARY_CSV, TRAINING_FIELD, VALIDATION_CSV)
    ctx.details.update({
        "n_months": schedule.n_months,
        "expected_missing_fraction": schedule.expected_missing_fraction(calendar),
        "realised_missing_fraction": training.missing_fraction(),
        "n_validation_points": index.n_points,
    })


def run_truth(ctx: StageContext) -> None:
    settings = ctx.settings
    grid = _load_grid(ctx)
    anomaly = read_field(ctx.require(ANOMALY_FIELD), grid=grid)
    index = _load_validation(ctx, anomaly.calendar)

    neighbors = build_neighbor_table(grid, settings.cylinder.radius_km, settings.threads)
    minfield = minimum_process(
        anomaly, neighbors, settings.cylinder.half_window_days, NaMode.IGNORE_MISSING,
        settings.threads, grid=grid, source=ANOMALY_FIELD,
    )
    write_field(minfield.field, ctx.path(MINIMUM_FIELD))
    truth = extract_truth(minfield, index)
    write_truth_csv(truth, ctx.path(TRUTH_CSV))
    ctx.wrote(MINIMUM_FIELD, TRUTH_CSV)
    ctx.details.update({
        "n_validation_points": index.n_points,
        "mean_neighbors": float(neighbors.sizes().mean()),
        "x_true_max": float(truth["x_true"].max()) if len(truth) else None,
    })


def run_benchmark(ctx: StageContext) -> None:
    settings = ctx.settings
    grid = _load_grid(ctx)
    training = read_field(ctx.require(TRAINING_FIELD), grid=grid)
    n_points = _expected_points(ctx)

    neighbors = build_neighbor_table(grid, settings.cylinder.radius_km, settings.threads)
    half_window = settings.cylinder.half_window_days
    minfield = minimum_process(
        training, neighbors, half_window, NaMode.REQUIRE_COMPLETE, settings.threads,
        grid=grid, source=TRAINING_FIELD,
    )
    complete = complete_neighborhood_mask(training, neighbors, half_window, settings.threads)
    hist = pool_minima(minfield, complete, settings.design, settings.threads)
    cdf = benchmark_cdf(hist)

    write_submission(benchmark_predictions(cdf, n_points), ctx.path(BENCHMARK_SUBMISSION))
    write_histogram(hist, ctx.path(BENCHMARK_HISTOGRAM_CSV))
    ctx.wrote(BENCHMARK_SUBMISSION, BENCHMARK_HISTOGRAM_CSV)
    ctx.details.update({
        "pooled_minima": hist.total_n,
        "complete_neighborhoods": int(complete.sum()),
        "complete_fraction": float(complete.mean()),
        "n_points": n_points,
    })


def _submission_path(ctx: StageContext) -> Path:
    if not ctx.args.submission:
        raise ConfigurationError(f"the {ctx.stage} stage needs --submission")
    return Path(ctx.args.submission[0])


def run_validate(ctx: StageContext) -> None:
    path = _submission_path(ctx)
    check = validate_submission(path, _expected_points(ctx), ctx.settings.design)
    ctx.details.update({"submission": str(path), "ok": check.ok, "reason": check.reason, "detail": check.detail})
    if not check.ok:
        raise SubmissionValidationError(f"submission {path} is invalid: {check.reason} ({check.detail})")


def run_score(ctx: StageContext) -> None:
    settings = ctx.settings
    path = _submission_path(ctx)
    team = ctx.args.team or path.stem
    x_true = truth_values(read_truth_csv(ctx.require(TRUTH_CSV)), _expected_points(ctx))
    report = score_submission(
        SubmissionEntry(team=team, path=str(path)), x_true, settings.design, settings.weight,
        settings.threads, ctx.args.round,
    )
    if report.valid:
        name = f"scores_{team}.csv"
        pd.DataFrame({"point_id": np.arange(report.per_point.size), "twcrps": report.per_point}).to_csv(
            ctx.path(name), index=False, lineterminator="\n", float_format="%.17g",
        )
        ctx.wrote(name)
    ctx.details.update({
        "team": team,
        "valid": report.valid,
        "reason": report.reason,
        "twcrps": _finite_or_none(report.twcrps),
        "score_e4": _finite_or_none(report.score_e4),
    })


def _rank_entries(ctx: StageContext) -> List[SubmissionEntry]:
    late = set(ctx.args.late or [])
    entries = []
    for spec in ctx.args.submission or []:
        team, sep, path = spec.partition("=")
        if not sep:
            team, path = Path(spec).stem, spec
        entries.append(SubmissionEntry(team=team, path=path, late=team in late))
    if not any(entry.team == BENCHMARK_TEAM for entry in entries) and ctx.path(BENCHMARK_SUBMISSION).exists():
        entries.append(SubmissionEntry(team=BENCHMARK_TEAM, path=str(ctx.path(BENCHMARK_SUBMISSION))))
    if not entries:
        raise ConfigurationError("the rank stage needs at least one --submission")
    return entries


def run_rank(ctx: StageContext) -> None:
    settings = ctx.settings
    entries = _rank_entries(ctx)
    truth = read_truth_csv(ctx.require(TRUTH_CSV))
    n_points = _expected_points(ctx)

    common = dict(
        expected_n_points=n_points, design=settings.design, spec=settings.weight, threads=settings.threads,
        reference_team=ctx.args.reference, round_label=ctx.args.round,
    )
    extended = leaderboard(entries, truth, include_late=True, **common)
    official = leaderboard(entries, truth, include_late=False, **common)

    write_leaderboard_csv(extended, ctx.path(LEADERBOARD_CSV))
    write_leaderboard_csv(official, ctx.path(OFFICIAL_LEADERBOARD_CSV))
    table = format_table(extended)
    ctx.path(LEADERBOARD_TXT).write_text(table + "\n", encoding="utf-8")
    logger.info(f"Leaderboard ({ctx.args.round}):\n{table}")
    ctx.wrote(LEADERBOARD_CSV, OFFICIAL_LEADERBOARD_CSV, LEADERBOARD_TXT)
    if ctx.args.excel:
        write_excel(extended, ctx.path(LEADERBOARD_XLSX))
        ctx.wrote(LEADERBOARD_XLSX)

    ctx.details.update({
        "round": ctx.args.round,
        "ranking": [
            {"rank": report.rank, "team": report.team, "score_e4": _finite_or_none(report.score_e4),
             "valid": report.valid, "late": report.late}
            for report in extended
        ],
        "official_order": [report.team for report in official],
    })


def run_summary(ctx: StageContext) -> None:
    settings = ctx.settings
    design = settings.design
    grid = _load_grid(ctx)
    minimum = read_field(ctx.require(MINIMUM_FIELD), grid=grid)
    index = _load_validation(ctx, minimum.calendar)

    all_points = PooledMinimaHistogram.from_values(minimum.values, design)
    at_validation = PooledMinimaHistogram.from_values(minimum.values[index.days - 1, index.cell_ids], design)
    location_max = np.fmax.reduce(minimum.values, axis=0)
    per_location = PooledMinimaHistogram.from_values(location_max, design)

    frame = all_points.to_frame().rename(columns={"count": "all_points"})
    frame["validation_points"] = at_validation.counts
    frame["location_max"] = per_location.counts
    frame.to_csv(ctx.path(SUMMARY_HISTOGRAM_CSV), index=False, lineterminator="\n", float_format="%.17g")
    pd.DataFrame({"x": design.points, "w": weight_vector(design, settings.weight)}).to_csv(
        ctx.path(WEIGHT_CURVE_CSV), index=False, lineterminator="\n", float_format="%.17g",
    )

    summary = {
        "n_all_points": all_points.total_n,
        "n_validation_points": at_validation.total_n,
        "n_locations": per_location.total_n,
        "weight": settings.weight.model_dump(mode="json"),
        "design": design.model_dump(mode="json"),
    }
    trend_path = ctx.path(TREND_JSON)
    if trend_path.exists():
        trend = json.loads(trend_path.read_text(encoding="utf-8"))
        summary["trend_boxplots"] = {"mean": trend.get("mean_boxplots", []), "sd": trend.get("sd_boxplots", [])}
    with open(ctx.path(SUMMARY_JSON), "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    ctx.wrote(SUMMARY_HISTOGRAM_CSV, WEIGHT_CURVE_CSV, SUMMARY_JSON)
    ctx.details.update({key: summary[key] for key in ("n_all_points", "n_validation_points", "n_locations")})


STAGE_RUNNERS: Dict[str, Callable[[StageContext], None]] = {
    "synth": run_synth,
    "climatology": run_climatology,
    "mask": run_mask,
    "truth": run_truth,
    "benchmark": run_benchmark,
    "validate": run_validate,
    "score": run_score,
    "rank": run_rank,
    "summary": run_summary,
}


def _parse_set(values: Optional[List[str]]) -> Dict[str, str]:
    overrides = {}
    for item in values or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, help="worker threads (default: HARNESS_THREADS or 1)")
    common.add_argument("--workdir", help="artifact directory")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--submission", action="append",
                        help="submission file; for rank, TEAM=PATH (repeatable)")
    common.add_argument("--team", help="team label for score (default: file name)")
    common.add_argument("--late", action="append", metavar="TEAM", help="mark a team's submission as late")
    common.add_argument("--reference", default=BENCHMARK_TEAM, help="team improvements are measured against")
    common.add_argument("--round", default="final", help="round label carried into the outputs")
    common.add_argument("--excel", action="store_true", help="also write the leaderboard as .xlsx")

    parser = argparse.ArgumentParser(
        prog="harness",
        description="Spatio-temporal extremes prediction competition harness",
    )
    subparsers = parser.add_subparsers(dest="stage", required=True, metavar="STAGE")
    for stage in STAGES:
        subparsers.add_parser(stage, parents=[common], help=STAGE_HELP[stage])
    return parser


def run(args: argparse.Namespace) -> RunRecord:
    """Resolve the settings, run one stage and return its run record."""
    overrides = _parse_set(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.workdir is not None:
        overrides["paths.workdir"] = args.workdir
    settings = load_settings(args.config, overrides)

    ctx = StageContext(args.stage, settings, args)
    ctx.workdir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running stage {args.stage} in {ctx.workdir} (seed {settings.seed}, {settings.threads} threads)")
    started = time.perf_counter()
    failure = None
    try:
        STAGE_RUNNERS[args.stage](ctx)
    except SubmissionValidationError as e:
        failure = e
    record = RunRecord(
        stage=args.stage,
        config_hash=config_hash(settings),
        seed=settings.seed,
        wall_time_s=round(time.perf_counter() - started, 3),
        outputs={name: file_digest(path) for name, path in sorted(ctx.outputs.items())},
        details=ctx.details,
    )
    if failure is not None:
        print(record.model_dump_json())
        raise failure
    return record


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        Process exit status
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(
        log_level=getattr(logging, args.log_level) if args.log_level else log_level_from_env(),
        log_to_file=file_logging_enabled(),
        log_to_console=True,
    )
    set_stage(args.stage)

    try:
        record = run(args)
    except HarnessError as e:
        logger.error(f"Stage {args.stage} failed: {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"Stage {args.stage} failed: {e}", exc_info=True)
        return DataError.exit_code
    except OSError as e:
        logger.error(f"Stage {args.stage} failed: {e}", exc_info=True)
        return DataError.exit_code
    print(record.model_dump_json())
    return 0
