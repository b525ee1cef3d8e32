"""
End-to-end runs of the command line on a tiny synthetic basin.
"""
import json
import logging

import numpy as np
import pandas as pd
import pytest

from harness.cli import main
from harness.model import DesignGrid
from harness.scoring.submission import read_submission, write_submission
from harness.utils.logging_config import PACKAGE_LOGGER, setup_logging

PIPELINE = ["synth", "climatology", "mask", "truth", "benchmark"]

TINY_CONFIG = """\
# 30 cells x 3 years
seed = 11
synth.rows = 6
synth.cols = 5
synth.start_year = 2005
synth.years = 3
synth.anomaly_cov.range_km = 30
mask.split_date = 2006-01-01
mask.cov.range_km = 20
validation.n_per_day = 5
cylinder.radius_km = 8
cylinder.half_window_days = 1
"""


def run_stage(capsys, stage, workdir, config, *extra):
    code = main([stage, "--config", str(config), "--workdir", str(workdir), "--log-level", "WARNING", *extra])
    out = capsys.readouterr().out.strip().splitlines()
    return code, (json.loads(out[-1]) if out else None)


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture
def pipeline(tmp_path, config, capsys):
    workdir = tmp_path / "work"
    records = {}
    for stage in PIPELINE:
        code, records[stage] = run_stage(capsys, stage, workdir, config)
        assert code == 0, stage
    return workdir, records


def perfect_submission(workdir, path):
    x_true = pd.read_csv(workdir / "truth.csv")["x_true"].to_numpy()
    write_submission((x_true[:, None] <= DesignGrid().points[None, :]).astype(np.float32), path)


def broken_submission(workdir, path):
    preds = read_submission(workdir / "benchmark.xtsb")
    preds[0, 100:] = 0.0
    preds[0, :100] = 1.0
    write_submission(preds, path)


class TestPipeline:
    def test_records(self, pipeline):
        workdir, records = pipeline
        assert [records[stage]["stage"] for stage in PIPELINE] == PIPELINE
        assert len({records[stage]["config_hash"] for stage in PIPELINE}) == 1
        assert all(record["seed"] == 11 for record in records.values())
        assert set(records["synth"]["outputs"]) == {"grid.csv", "raw.xtfd", "true_mean.xtfd", "synth_truth.json"}
        assert records["synth"]["details"]["n_cells"] == 30
        assert records["mask"]["details"]["n_validation_points"] == 2 * 12 * 3 * 5
        assert records["benchmark"]["details"]["pooled_minima"] > 0
        for record in records.values():
            for name in record["outputs"]:
                assert (workdir / name).exists()

    def test_validation_points_are_not_training_data(self, pipeline):
        from harness.fields.store import read_field

        workdir, _ = pipeline
        training = read_field(workdir / "training.xtfd")
        index = pd.read_csv(workdir / "validation_index.csv")
        days = [training.calendar.date_to_t(pd.Timestamp(day).date()) - 1 for day in index["date"]]
        assert np.isnan(training.values[days, index["cell_id"].to_numpy()]).all()

    def test_benchmark_passes_validation(self, pipeline, config, capsys):
        workdir, _ = pipeline
        code, record = run_stage(capsys, "validate", workdir, config, "--submission", str(workdir / "benchmark.xtsb"))
        assert code == 0
        assert record["details"]["ok"] is True

    def test_truncated_submission(self, pipeline, config, capsys):
        workdir, _ = pipeline
        blob = (workdir / "benchmark.xtsb").read_bytes()
        n_points = int.from_bytes(blob[8:12], "little")
        (workdir / "half.xtsb").write_bytes(blob[:12 + (n_points // 2) * 1600])
        code, record = run_stage(capsys, "validate", workdir, config, "--submission", str(workdir / "half.xtsb"))
        assert code == 5
        assert record["details"]["reason"] == "row count"

    def test_score_stage(self, pipeline, config, capsys):
        workdir, _ = pipeline
        perfect_submission(workdir, workdir / "perfect.xtsb")
        code, record = run_stage(capsys, "score", workdir, config, "--submission", str(workdir / "perfect.xtsb"))
        assert code == 0
        assert record["details"]["team"] == "perfect"
        assert record["details"]["twcrps"] == 0.0
        assert (workdir / "scores_perfect.csv").exists()

    def test_rank_stage(self, pipeline, config, capsys):
        workdir, _ = pipeline
        perfect_submission(workdir, workdir / "perfect.xtsb")
        broken_submission(workdir, workdir / "broken.xtsb")
        code, record = run_stage(
            capsys, "rank", workdir, config,
            "--submission", f"perfect={workdir / 'perfect.xtsb'}",
            "--submission", f"broken={workdir / 'broken.xtsb'}",
            "--late", "perfect", "--excel",
        )
        assert code == 0
        ranking = record["details"]["ranking"]
        assert [entry["team"] for entry in ranking] == ["perfect", "benchmark", "broken"]
        assert ranking[0]["score_e4"] == 0.0
        assert ranking[2]["score_e4"] is None and ranking[2]["valid"] is False
        assert record["details"]["official_order"] == ["benchmark", "broken"]

        lines = (workdir / "leaderboard.csv").read_text().splitlines()
        assert lines[0] == "rank,team,score_e4"
        assert lines[3] == "3,broken,inf"
        assert (workdir / "leaderboard.xlsx").read_bytes()[:2] == b"PK"

    def test_summary_stage(self, pipeline, config, capsys):
        workdir, _ = pipeline
        code, record = run_stage(capsys, "summary", workdir, config)
        assert code == 0
        summary = json.loads((workdir / "summary.json").read_text())
        assert summary["n_validation_points"] == 360
        assert "trend_boxplots" in summary
        assert len(pd.read_csv(workdir / "weight_curve.csv")) == 400


class TestReplay:
    def test_same_seed_same_bytes(self, tmp_path, config, capsys):
        digests = []
        for name, threads in (("a", "1"), ("b", "3")):
            outputs = {}
            for stage in PIPELINE:
                code, record = run_stage(capsys, stage, tmp_path / name, config, "--threads", threads)
                assert code == 0
                outputs.update(record["outputs"])
            digests.append(outputs)
        assert digests[0] == digests[1]

    def test_seed_changes_the_data(self, tmp_path, config, capsys):
        _, first = run_stage(capsys, "synth", tmp_path / "a", config)
        _, second = run_stage(capsys, "synth", tmp_path / "b", config, "--seed", "12")
        assert first["outputs"]["raw.xtfd"] != second["outputs"]["raw.xtfd"]
        assert first["outputs"]["grid.csv"] == second["outputs"]["grid.csv"]
        assert first["config_hash"] != second["config_hash"]


class TestExitCodes:
    def test_usage(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["no-such-stage"])
        assert excinfo.value.code == 2

    def test_unknown_setting(self, tmp_path, config, capsys):
        code, _ = run_stage(capsys, "synth", tmp_path / "w", config, "--set", "colour=blue")
        assert code == 3

    def test_malformed_set(self, tmp_path, config, capsys):
        code, _ = run_stage(capsys, "synth", tmp_path / "w", config, "--set", "seed")
        assert code == 3

    def test_missing_inputs(self, tmp_path, config, capsys):
        code, _ = run_stage(capsys, "climatology", tmp_path / "empty", config)
        assert code == 4

    def test_validate_needs_a_submission(self, pipeline, config, capsys):
        workdir, _ = pipeline
        code, _ = run_stage(capsys, "validate", workdir, config)
        assert code == 3

    def test_workdir_that_is_a_file(self, tmp_path, config, capsys):
        occupied = tmp_path / "occupied"
        occupied.write_text("not a directory")
        code, _ = run_stage(capsys, "synth", occupied / "work", config)
        assert code == 4


class TestLogLevel:
    @pytest.fixture(autouse=True)
    def restore_package_logger(self):
        yield
        setup_logging(log_level=logging.WARNING, log_to_file=False, log_to_console=True)

    def test_environment_level_applies_without_the_flag(self, tmp_path, config, capsys, monkeypatch):
        monkeypatch.setenv("HARNESS_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("HARNESS_LOG_TO_FILE", "false")
        code = main(["synth", "--config", str(config), "--workdir", str(tmp_path / "w")])
        capsys.readouterr()
        assert code == 0
        assert logging.getLogger(PACKAGE_LOGGER).level == logging.DEBUG

    def test_flag_wins_over_the_environment(self, tmp_path, config, capsys, monkeypatch):
        monkeypatch.setenv("HARNESS_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("HARNESS_LOG_TO_FILE", "false")
        code, _ = run_stage(capsys, "synth", tmp_path / "w", config)
        assert code == 0
        assert logging.getLogger(PACKAGE_LOGGER).level == logging.WARNING
