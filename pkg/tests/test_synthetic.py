import json

import numpy as np
import pytest

from harness.fields.calendar import FEB29_SLOT
from harness.model import CovarianceSpec, SynthConfig
from harness.preprocess.climatology import compute_anomaly, estimate_mean, trend_diagnostics
from harness.simulation.synthetic import (
    anomaly_sd_series, boxcar_attenuation, generate, ring_positions, seasonal_cycle, split_truth,
    write_ground_truth,
)


def lag_one_autocorrelation(anomaly):
    centered = anomaly - anomaly.mean(axis=0)
    return float((centered[1:] * centered[:-1]).sum() / (centered * centered).sum())


class TestSeasonalCycle:
    def test_ring_positions(self):
        positions = ring_positions()
        assert positions.shape == (366,)
        assert positions[0] == 0.0
        assert positions[FEB29_SLOT - 1] == 58.5
        assert positions[FEB29_SLOT] == 59.0
        assert positions[-1] == 364.0

    def test_peak_day(self):
        config = SynthConfig(seasonal_peak_day=227)
        # day 227 of a common year is Aug 15, slot 228
        assert int(np.argmax(seasonal_cycle(config))) == 227
        assert seasonal_cycle(config).max() == pytest.approx(config.seasonal_amplitude_c)

    def test_sd_series_must_stay_positive(self):
        with pytest.raises(ValueError):
            anomaly_sd_series(SynthConfig(anomaly_sd_c=0.1, sd_trend_c_per_century=-5000.0), 3650)

    def test_sd_series_is_centered(self):
        sd = anomaly_sd_series(SynthConfig(anomaly_sd_c=0.8, sd_trend_c_per_century=1.0), 1001)
        assert sd[500] == pytest.approx(0.8)
        assert sd[-1] > sd[0]


class TestGenerate:
    def test_reproducible(self, small_synth_config):
        first = generate(small_synth_config)
        second = generate(small_synth_config, threads=3)
        assert first.raw.values.tobytes() == second.raw.values.tobytes()
        other = generate(small_synth_config.model_copy(update={"seed": 8}))
        assert not np.array_equal(first.raw.values, other.raw.values)

    def test_shapes_and_truth(self, small_synth_config):
        dataset = generate(small_synth_config)
        assert dataset.grid.n_cells == 30
        assert dataset.raw.n_days == 1461
        assert dataset.true_mean.values.shape == (366, 30)
        assert dataset.true_mean.counts[:, 0].sum() == 1461
        # cell 0 sits at the origin latitude; the generating mean is not smoothed
        assert np.allclose(dataset.true_mean.values[:, 0], small_synth_config.base_c + seasonal_cycle(small_synth_config))
        assert not dataset.raw.missing().any()

    def test_near_constant_limit(self):
        config = SynthConfig(rows=3, cols=2, years=1, seasonal_amplitude_c=0.0, trend_c_per_century=0.0,
                             anomaly_sd_c=1e-6, anomaly_cov=CovarianceSpec(range_km=20.0))
        dataset = generate(config)
        expected = config.base_c + config.meridional_gradient_c_per_deg * (dataset.grid.lat - config.origin_lat)
        assert np.allclose(dataset.raw.values, expected[None, :], atol=1e-4)

    @pytest.mark.parametrize("phi", [0.0, 0.8])
    def test_ar_coefficient(self, small_synth_config, phi):
        dataset = generate(small_synth_config.model_copy(update={"ar_coefficient": phi}))
        _, anomaly = split_truth(dataset)
        assert lag_one_autocorrelation(anomaly) == pytest.approx(phi, abs=3.0 / np.sqrt(dataset.raw.n_days))

    def test_anomaly_scale(self, small_synth_config):
        _, anomaly = split_truth(generate(small_synth_config))
        assert anomaly.std() == pytest.approx(small_synth_config.anomaly_sd_c, rel=0.25)

    def test_ground_truth_file(self, tmp_path, small_synth_config):
        write_ground_truth(generate(small_synth_config), tmp_path / "truth.json")
        summary = json.loads((tmp_path / "truth.json").read_text())
        assert summary["n_days"] == 1461
        assert summary["trend_c_per_century"] == small_synth_config.trend_c_per_century
        assert summary["config"]["seed"] == 7
        assert summary["anomaly_stream_offset"] == 1_000_000


class TestRecovery:
    def test_estimated_mean_matches_the_generating_mean(self):
        config = SynthConfig(rows=6, cols=5, years=10, start_year=2005, trend_c_per_century=0.0,
                             anomaly_cov=CovarianceSpec(range_km=10.0), seed=13)
        dataset = generate(config)
        estimated = estimate_mean(dataset.raw)
        assert np.isfinite(estimated.values).all()

        rmse = np.sqrt(np.mean((estimated.values - dataset.true_mean.values) ** 2))
        bound = config.anomaly_sd_c / np.sqrt(config.years) * 1.1 + config.seasonal_amplitude_c * (
            1.0 - boxcar_attenuation())
        assert rmse <= bound

    @pytest.mark.slow
    def test_shrinking_sd_is_recovered(self):
        config = SynthConfig(rows=6, cols=5, years=31, start_year=1985, trend_c_per_century=0.0,
                             sd_trend_c_per_century=-0.5, ar_coefficient=0.0,
                             anomaly_cov=CovarianceSpec(range_km=2.0), seed=17)
        raw = generate(config).raw
        report = trend_diagnostics(compute_anomaly(raw, estimate_mean(raw)))
        assert report.basin_sd_slope == pytest.approx(-0.5, abs=0.1)
        assert report.basin_mean_slope == pytest.approx(0.0, abs=0.5)
