"""
Synthetic Data Module

Generates SST-like datasets with a known generating mean, so the pipeline
can be checked without the real data:

    Y(s, t) = base + gradient * (lat(s) - origin_lat) + seasonal(doy(t))
              + trend * t / 36525 + sd(t) * U(s, t)

U is a unit-variance process, AR(1) in time with Gaussian-random-field
innovations in space:

    U(., 1) = Z_1,   U(., t) = phi * U(., t - 1) + sqrt(1 - phi^2) * Z_t

The seasonal term is one annual cosine on the 365-day ring that skips Feb 29
(Feb 29 sits halfway between Feb 28 and Mar 1), so a centered 7-day boxcar
over the ring scales it by exactly sin(7 pi / 365) / (7 sin(pi / 365)).
"""
import json
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from harness.fields.calendar import FEB29_SLOT, Calendar
from harness.fields.store import Field
from harness.geometry.grid import Grid, regular_grid
from harness.model import SynthConfig
from harness.preprocess.climatology import N_SLOTS, SMOOTHING_WINDOW_DAYS, MeanSurface
from harness.simulation.random_fields import GaussianFieldSimulator
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

# Innovation of day t is drawn from stream SYNTH_STREAM_OFFSET + t
SYNTH_STREAM_OFFSET = 1_000_000

DAYS_PER_CENTURY = 36525.0

# Days simulated per batch of innovations
_DAY_BATCH = 1024


class SyntheticDataset(BaseModel):
    """
    A generated dataset and the truth it was generated from.

    Attributes:
        grid: the lattice
        raw: Y as a float32 field
        true_mean: generating seasonal mean surface (trend excluded)
        trend_c_per_century: generating linear trend
        config: generator parameters
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    raw: Field
    true_mean: MeanSurface
    trend_c_per_century: float
    config: SynthConfig


def ring_positions() -> np.ndarray:
    """Position of every day-of-year slot on the 365-day ring; Feb 29 is 58.5."""
    positions = np.empty(N_SLOTS)
    positions[:FEB29_SLOT - 1] = np.arange(FEB29_SLOT - 1)
    positions[FEB29_SLOT - 1] = FEB29_SLOT - 1.5
    positions[FEB29_SLOT:] = np.arange(FEB29_SLOT - 1, 365)
    return positions


def seasonal_cycle(config: SynthConfig) -> np.ndarray:
    """Seasonal term per day-of-year slot (length 366)."""
    phase = 2.0 * np.pi * (ring_positions() - (config.seasonal_peak_day - 1)) / 365.0
    return config.seasonal_amplitude_c * np.cos(phase)


def boxcar_attenuation(window: int = SMOOTHING_WINDOW_DAYS) -> float:
    """Factor a centered ``window``-day boxcar applies to a 365-day harmonic."""
    return float(np.sin(window * np.pi / 365.0) / (window * np.sin(np.pi / 365.0)))


def true_mean_surface(grid: Grid, calendar: Calendar, config: SynthConfig) -> MeanSurface:
    """Generating mean per (day-of-year slot, cell); counts are the slot's occurrences in the calendar."""
    spatial = config.base_c + config.meridional_gradient_c_per_deg * (grid.lat - config.origin_lat)
    values = seasonal_cycle(config)[:, None] + spatial[None, :]
    occurrences = np.bincount(calendar.doy_slots - 1, minlength=N_SLOTS)
    counts = np.repeat(occurrences[:, None], grid.n_cells, axis=1).astype(np.int64)
    return MeanSurface(values=values, counts=counts)


def anomaly_sd_series(config: SynthConfig, n_days: int) -> np.ndarray:
    """sd(t), drifting linearly about the configured SD around the middle of the series."""
    t = np.arange(1, n_days + 1, dtype=np.float64)
    sd = config.anomaly_sd_c + config.sd_trend_c_per_century * (t - (n_days + 1) / 2.0) / DAYS_PER_CENTURY
    if sd.min() <= 0:
        raise ValueError(
            f"anomaly SD drift of {config.sd_trend_c_per_century} degC/century makes the SD nonpositive"
        )
    return sd


def generate(config: SynthConfig, threads: int = 1) -> SyntheticDataset:
    """
    Generate a dataset.

    Args:
        config: generator parameters
        threads: worker threads for the innovation draws; output does not depend on it

    Returns:
        SyntheticDataset with the raw field and the generating truth

    Raises:
        CapExceededError: If the grid is too large to simulate
        FactorizationError: If the anomaly covariance cannot be factorized
    """
    grid = regular_grid(config.rows, config.cols, config.origin_lon, config.origin_lat, config.spacing_deg)
    calendar = Calendar.from_years(config.start_year, config.years, config.calendar_kind)
    logger.info(
        f"Generating synthetic dataset: {grid.n_cells} cells x {calendar.n_days} days "
        f"({config.calendar_kind.value}), seed {config.seed}"
    )

    simulator = GaussianFieldSimulator(grid, config.anomaly_cov)
    mean = true_mean_surface(grid, calendar, config)
    sd = anomaly_sd_series(config, calendar.n_days)
    t = np.arange(1, calendar.n_days + 1, dtype=np.float64)
    deterministic = mean.values[calendar.doy_slots - 1] + (config.trend_c_per_century * t / DAYS_PER_CENTURY)[:, None]

    phi = config.ar_coefficient
    innovation_scale = np.sqrt(1.0 - phi * phi)
    values = np.empty((calendar.n_days, grid.n_cells), dtype=np.float32)
    state = None
    for start in range(0, calendar.n_days, _DAY_BATCH):
        stop = min(start + _DAY_BATCH, calendar.n_days)
        streams = [SYNTH_STREAM_OFFSET + day for day in range(start + 1, stop + 1)]
        innovations = simulator.sample_matrix(config.seed, streams, threads)
        for offset, z in enumerate(innovations):
            state = z if state is None else phi * state + innovation_scale * z
            day = start + offset
            values[day] = deterministic[day] + sd[day] * state
        logger.debug(f"Generated days {start + 1}..{stop}")

    raw = Field(values=values, calendar=calendar)
    logger.info(f"Synthetic field ready: values span [{values.min():.2f}, {values.max():.2f}] degC")
    return SyntheticDataset(
        grid=grid, raw=raw, true_mean=mean, trend_c_per_century=config.trend_c_per_century, config=config,
    )


def ground_truth_summary(dataset: SyntheticDataset) -> dict:
    """Generating parameters and derived constants, as written next to the raw field."""
    config = dataset.config
    return {
        "config": config.model_dump(mode="json"),
        "n_cells": dataset.grid.n_cells,
        "n_days": dataset.raw.n_days,
        "start_date": dataset.raw.calendar.start_date.isoformat(),
        "calendar_kind": dataset.raw.calendar.kind.value,
        "trend_c_per_century": dataset.trend_c_per_century,
        "sd_trend_c_per_century": config.sd_trend_c_per_century,
        "seasonal_amplitude_c": config.seasonal_amplitude_c,
        "boxcar_attenuation": boxcar_attenuation(),
        "anomaly_stream_offset": SYNTH_STREAM_OFFSET,
    }


def write_ground_truth(dataset: SyntheticDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ground_truth_summary(dataset), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote synthetic ground truth to {path}")


def split_truth(dataset: SyntheticDataset) -> Tuple[np.ndarray, np.ndarray]:
    """Per-day deterministic part and anomaly part of the raw field, T x S float64."""
    calendar = dataset.raw.calendar
    t = np.arange(1, calendar.n_days + 1, dtype=np.float64)
    deterministic = (dataset.true_mean.values[calendar.doy_slots - 1]
                     + (dataset.trend_c_per_century * t / DAYS_PER_CENTURY)[:, None])
    return deterministic, dataset.raw.as_float64() - deterministic
