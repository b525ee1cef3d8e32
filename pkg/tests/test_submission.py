import struct

import numpy as np
import pytest

from harness.exceptions import SubmissionIOError
from harness.extremes.benchmark import PooledMinimaHistogram, benchmark_cdf, benchmark_predictions
from harness.scoring.submission import (
    clamp_near_bounds, load_submission, read_submission, validate_submission, write_submission,
    write_submission_csv,
)


@pytest.fixture
def benchmark_preds(rng):
    cdf = benchmark_cdf(PooledMinimaHistogram.from_values(rng.normal(0.5, 0.7, size=5000)))
    return benchmark_predictions(cdf, 30)


class TestBinary:
    def test_benchmark_output_is_valid(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds, tmp_path / "b.xtsb")
        check, preds = load_submission(tmp_path / "b.xtsb", 30)
        assert check.ok
        assert np.array_equal(preds, benchmark_preds.astype(np.float64))

    def test_layout(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds, tmp_path / "b.xtsb")
        blob = (tmp_path / "b.xtsb").read_bytes()
        assert struct.unpack_from("<4sII", blob) == (b"XTSB", 1, 30)
        assert len(blob) == 12 + 30 * 400 * 4

    def test_decreasing_row(self, tmp_path, benchmark_preds):
        preds = benchmark_preds.copy()
        preds[4, :] = np.linspace(0.0, 1.0, 400)
        preds[4, 199], preds[4, 200] = 0.6, 0.4
        write_submission(preds, tmp_path / "b.xtsb")
        check = validate_submission(tmp_path / "b.xtsb", 30)
        assert not check.ok
        assert check.reason == "monotonicity"
        assert "row 4" in check.detail

    def test_half_the_rows(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds, tmp_path / "b.xtsb")
        blob = (tmp_path / "b.xtsb").read_bytes()
        (tmp_path / "b.xtsb").write_bytes(blob[:12 + 15 * 400 * 4])
        check = validate_submission(tmp_path / "b.xtsb", 30)
        assert check.reason == "row count"

    def test_wrong_number_of_points(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds[:20], tmp_path / "b.xtsb")
        assert validate_submission(tmp_path / "b.xtsb", 30).reason == "row count"

    def test_partial_last_row(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds, tmp_path / "b.xtsb")
        blob = (tmp_path / "b.xtsb").read_bytes()
        (tmp_path / "b.xtsb").write_bytes(blob[:-6])
        assert validate_submission(tmp_path / "b.xtsb", 30).reason == "row count"

    def test_trailing_bytes_after_the_last_row(self, tmp_path, benchmark_preds):
        write_submission(benchmark_preds, tmp_path / "b.xtsb")
        with open(tmp_path / "b.xtsb", "ab") as handle:
            handle.write(b"\x00" * 6)
        assert validate_submission(tmp_path / "b.xtsb", 30).reason == "parse"

    def test_non_finite(self, tmp_path, benchmark_preds):
        preds = benchmark_preds.copy()
        preds[2, 10] = np.nan
        write_submission(preds, tmp_path / "b.xtsb")
        check = validate_submission(tmp_path / "b.xtsb", 30)
        assert check.reason == "non-finite"
        assert check.detail == "row 2, f011"

    def test_out_of_range(self, tmp_path, benchmark_preds):
        preds = benchmark_preds.copy()
        preds[0, -1] = 1.01
        write_submission(preds, tmp_path / "b.xtsb")
        assert validate_submission(tmp_path / "b.xtsb", 30).reason == "out of range"

    def test_missing_file(self, tmp_path):
        with pytest.raises(SubmissionIOError):
            validate_submission(tmp_path / "absent.xtsb", 30)


class TestCsv:
    def test_round_trip(self, tmp_path, benchmark_preds):
        write_submission_csv(benchmark_preds, tmp_path / "b.csv")
        header = (tmp_path / "b.csv").read_text().splitlines()[0].split(",")
        assert header[:3] == ["point_id", "f001", "f002"]
        assert header[-1] == "f400"
        check, preds = load_submission(tmp_path / "b.csv", 30)
        assert check.ok
        assert np.array_equal(preds.astype(np.float32), benchmark_preds)

    def test_row_width(self, tmp_path, benchmark_preds):
        write_submission_csv(benchmark_preds[:, :399], tmp_path / "b.csv")
        assert validate_submission(tmp_path / "b.csv", 30).reason == "row width"

    def test_not_a_submission(self, tmp_path):
        (tmp_path / "b.csv").write_text("team,score\nx,1\n")
        assert validate_submission(tmp_path / "b.csv", 1).reason == "parse"

    def test_read_gives_float64(self, tmp_path, benchmark_preds):
        write_submission_csv(benchmark_preds, tmp_path / "b.csv")
        assert read_submission(tmp_path / "b.csv").dtype == np.float64


class TestClamp:
    def test_tiny_excursions_are_clamped(self):
        preds = np.array([[-5e-10, 0.5, 1.0 + 5e-10]])
        assert clamp_near_bounds(preds).tolist() == [[0.0, 0.5, 1.0]]

    def test_larger_excursions_are_kept(self):
        preds = np.array([[-1e-6, 0.5, 1.0 + 1e-6]])
        assert np.array_equal(clamp_near_bounds(preds), preds)

    def test_clamped_file_is_valid(self, tmp_path):
        preds = np.tile(np.linspace(0.0, 1.0, 400), (2, 1))
        preds[:, 0] = -5e-10
        write_submission_csv(preds, tmp_path / "b.csv")
        # float32 cannot hold -5e-10 exactly but stays within the tolerance
        check, loaded = load_submission(tmp_path / "b.csv", 2)
        assert check.ok
        assert loaded[0, 0] == 0.0
