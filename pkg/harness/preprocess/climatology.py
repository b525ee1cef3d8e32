"""
Climatology Module

Decomposition of raw temperatures into a seasonal mean surface and anomalies,
Y = mu + A, and the trend diagnostics of the resulting anomalies.

The mean surface is estimated per cell and per day-of-year slot (see
``harness.fields.calendar``): first the average over all years of the
observed values on that calendar day, then a centered 7-day moving average
along the day-of-year cycle, circular across Dec 31 -> Jan 1.

Feb 29 (slot 60) forms its own group, averaged over leap years only. The
smoother runs over the 365-slot cycle that skips Feb 29; the Feb 29 slot itself
is smoothed over its 3 neighbors on either side.
"""
import json
import warnings
from datetime import date
from typing import List, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from harness.exceptions import DataError, EstimationGapError
from harness.fields.calendar import FEB29_SLOT, Calendar
from harness.fields.store import Field
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)

N_SLOTS = 366
SMOOTHING_WINDOW_DAYS = 7

# Slots of the cycle without Feb 29, 0-based
_RING = np.array([slot for slot in range(N_SLOTS) if slot != FEB29_SLOT - 1])

# Reference calendar used to store a mean surface as a field: one leap year
MEAN_SURFACE_CALENDAR = Calendar(start_date=date(2000, 1, 1), n_days=N_SLOTS)


class MeanSurface(BaseModel):
    """
    Per-cell, per-day-of-year mean, 366 x S.

    Attributes:
        values: smoothed means, NaN at estimation gaps
        counts: number of observations behind each unsmoothed day-of-year mean
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    counts: np.ndarray

    @property
    def n_cells(self) -> int:
        return int(self.values.shape[1])

    def gap_mask(self) -> np.ndarray:
        """True where no year contributed an observation."""
        return self.counts == 0

    def gaps(self) -> List[Tuple[int, int]]:
        """Estimation gaps as (cell_id, day_of_year slot 1..366) pairs."""
        slots, cells = np.nonzero(self.gap_mask())
        return [(int(cell), int(slot) + 1) for slot, cell in zip(slots, cells)]

    def to_field(self) -> Field:
        """The surface as a 366-day field over the year 2000."""
        return Field.from_array(self.values, MEAN_SURFACE_CALENDAR)

    @classmethod
    def from_field(cls, field: Field) -> "MeanSurface":
        """Rebuild a surface from its stored field; NaN entries become gaps."""
        if field.calendar != MEAN_SURFACE_CALENDAR:
            raise DataError(f"a mean surface field must span the 366 days of 2000, got {field.calendar}")
        values = field.as_float64()
        return cls(values=values, counts=np.isfinite(values).astype(np.int64))


class YearBoxplot(BaseModel):
    """Five-number summary over cells of one year's statistic."""
    year: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


class TrendReport(BaseModel):
    """
    Linear time trends of the anomaly process, in degC per century.

    Attributes:
        years: full calendar years used
        cell_slopes: per-cell slope of yearly anomaly means, NaN with fewer than 3 yearly values
        basin_mean_slope: slope of the basin average of yearly means
        basin_sd_slope: slope of the basin average of yearly standard deviations
        mean_boxplots: per-year summaries of the cell yearly means
        sd_boxplots: per-year summaries of the cell yearly standard deviations
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    years: List[int]
    cell_slopes: np.ndarray
    basin_mean_slope: float
    basin_sd_slope: float
    mean_boxplots: List[YearBoxplot]
    sd_boxplots: List[YearBoxplot]


def day_of_year_means(raw: Field) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unsmoothed per-cell day-of-year means.

    Missing values are left out of both numerator and denominator.

    Returns:
        (means, counts), each 366 x S; means are NaN where counts is 0
    """
    values = raw.as_float64()
    observed = np.isfinite(values)
    slots = raw.calendar.doy_slots - 1

    sums = np.zeros((N_SLOTS, raw.n_cells))
    counts = np.zeros((N_SLOTS, raw.n_cells), dtype=np.int64)
    np.add.at(sums, slots, np.where(observed, values, 0.0))
    np.add.at(counts, slots, observed.astype(np.int64))

    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / counts, np.nan)
    return means, counts


def _window_mean(stack: np.ndarray) -> np.ndarray:
    finite = np.isfinite(stack)
    total = np.where(finite, stack, 0.0).sum(axis=-1)
    n = finite.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, total / n, np.nan)


def smooth_day_of_year(daily: np.ndarray, window: int = SMOOTHING_WINDOW_DAYS) -> np.ndarray:
    """
    Centered circular moving average of a 366 x n day-of-year array.

    Non-Feb-29 slots average over the 365-slot ring that skips Feb 29; the
    Feb 29 slot averages over itself and its neighbors in the 366-slot order.
    NaN entries are left out of each window.
    """
    half = window // 2
    ring_values = daily[_RING]
    padded = np.concatenate([ring_values[-half:], ring_values, ring_values[:half]], axis=0)
    windows = np.lib.stride_tricks.sliding_window_view(padded, window, axis=0)

    smoothed = np.full_like(daily, np.nan)
    smoothed[_RING] = _window_mean(windows)
    feb29 = FEB29_SLOT - 1
    smoothed[feb29] = _window_mean(np.moveaxis(daily[feb29 - half:feb29 + half + 1], 0, -1))
    return smoothed


def estimate_mean(raw: Field, threads: int = 1) -> MeanSurface:
    """
    Estimate the seasonal mean surface of a raw temperature field.

    Args:
        raw: raw field spanning at least one full year
        threads: worker threads; output does not depend on it

    Returns:
        MeanSurface; (cell, day) pairs without observations are gaps (NaN)

    Raises:
        DataError: If the field spans less than a year
    """
    if raw.n_days < 365:
        raise DataError(f"mean estimation needs at least one full year of data, got {raw.n_days} days")
    logger.info(f"Estimating mean surface from {raw.n_days} days x {raw.n_cells} cells")

    means, counts = day_of_year_means(raw)

    def smooth_chunk(start, stop):
        return smooth_day_of_year(means[:, start:stop])

    smoothed = np.concatenate(map_chunks(smooth_chunk, raw.n_cells, threads), axis=1)
    smoothed[counts == 0] = np.nan

    surface = MeanSurface(values=smoothed, counts=counts)
    gap_mask = surface.gap_mask()
    n_gaps = int(gap_mask.sum())
    n_feb29_gaps = int(gap_mask[FEB29_SLOT - 1].sum())
    if n_gaps > n_feb29_gaps:
        logger.warning(f"Mean surface has {n_gaps - n_feb29_gaps} (cell, day-of-year) estimation gaps outside Feb 29")
    elif n_feb29_gaps:
        logger.debug(f"Feb 29 has no observations in {n_feb29_gaps} cells")
    return surface


def compute_anomaly(raw: Field, mean: MeanSurface) -> Field:
    """
    Anomalies A(s, t) = Y(s, t) - mu(s, doy(t)); missing in, missing out.

    Raises:
        DataError: If the mean surface has a different cell count
        EstimationGapError: If an observed value falls on an estimation gap
    """
    if mean.n_cells != raw.n_cells:
        raise DataError(f"mean surface has {mean.n_cells} cells but the field has {raw.n_cells}")
    values = raw.as_float64()
    mu = mean.values[raw.calendar.doy_slots - 1]

    needed = np.isfinite(values) & np.isnan(mu)
    if needed.any():
        days, cells = np.nonzero(needed)
        gaps = sorted({(int(cell), int(raw.calendar.doy_slots[day])) for day, cell in zip(days, cells)})
        logger.error(f"Anomaly needs {len(gaps)} mean values that could not be estimated")
        raise EstimationGapError(f"mean surface has gaps at needed (cell, day-of-year) pairs: {gaps[:10]}", gaps=gaps)

    anomaly = np.where(np.isfinite(values), values - mu, np.nan)
    logger.info(f"Computed anomalies for {raw.n_days} days x {raw.n_cells} cells")
    return Field.from_array(anomaly, raw.calendar)


def _ols_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise OLS slopes of y (n x m) on x (n), ignoring NaNs; NaN with < 3 points."""
    used = np.isfinite(y)
    n = used.sum(axis=0)
    xs = np.where(used, x[:, None], 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        x_bar = xs.sum(axis=0) / n
        y_bar = np.where(used, y, 0.0).sum(axis=0) / n
        dx = np.where(used, x[:, None] - x_bar, 0.0)
        dy = np.where(used, y - y_bar, 0.0)
        slopes = (dx * dy).sum(axis=0) / (dx * dx).sum(axis=0)
    return np.where(n >= 3, slopes, np.nan)


def _boxplots(years: List[int], table: np.ndarray) -> List[YearBoxplot]:
    summaries = []
    for year, row in zip(years, table):
        finite = row[np.isfinite(row)]
        if not finite.size:
            continue
        q = np.quantile(finite, [0.0, 0.25, 0.5, 0.75, 1.0])
        summaries.append(YearBoxplot(
            year=year, minimum=q[0], q1=q[1], median=q[2], q3=q[3], maximum=q[4]
        ))
    return summaries


def _full_years(calendar: Calendar) -> List[int]:
    years, lengths = np.unique(calendar.years, return_counts=True)
    full = []
    for year, length in zip(years, lengths):
        start = calendar.t_to_date(int(np.flatnonzero(calendar.years == year)[0]) + 1)
        if start.month == 1 and start.day == 1 and length >= 365:
            full.append(int(year))
    return full


def trend_diagnostics(anom: Field) -> TrendReport:
    """
    Linear trends of the anomaly process over full calendar years.

    Per cell: OLS slope of the yearly anomaly mean against the year centered at
    its midpoint, scaled to degC per century. Basin: the same regression of the
    basin average of cell yearly means and of cell yearly standard deviations.

    Raises:
        DataError: If fewer than 3 full years are available
    """
    years = _full_years(anom.calendar)
    if len(years) < 3:
        raise DataError(f"trend diagnostics need at least 3 full years, got {len(years)}")
    logger.info(f"Computing trend diagnostics over {len(years)} years for {anom.n_cells} cells")

    values = anom.as_float64()
    yearly_mean = np.full((len(years), anom.n_cells), np.nan)
    yearly_sd = np.full((len(years), anom.n_cells), np.nan)
    for row, year in enumerate(years):
        block = values[anom.calendar.years == year]
        finite = np.isfinite(block)
        n = finite.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(finite, block, 0.0).sum(axis=0) / n
            sq = np.where(finite, (block - mean) ** 2, 0.0).sum(axis=0)
            yearly_mean[row] = np.where(n > 0, mean, np.nan)
            yearly_sd[row] = np.where(n > 1, np.sqrt(sq / (n - 1)), np.nan)

    x = np.array(years, dtype=np.float64)
    x = x - (x[0] + x[-1]) / 2.0
    cell_slopes = 100.0 * _ols_slopes(x, yearly_mean)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        basin_mean = np.nanmean(yearly_mean, axis=1)
        basin_sd = np.nanmean(yearly_sd, axis=1)
    basin_mean_slope = float(100.0 * _ols_slopes(x, basin_mean[:, None])[0])
    basin_sd_slope = float(100.0 * _ols_slopes(x, basin_sd[:, None])[0])

    n_flagged = int(np.isnan(cell_slopes).sum())
    if n_flagged:
        logger.warning(f"{n_flagged} cells have fewer than 3 yearly values; their slopes are missing")
    logger.info(f"Basin trends: mean {basin_mean_slope:+.3f} degC/century, SD {basin_sd_slope:+.3f} degC/century")

    return TrendReport(
        years=years,
        cell_slopes=cell_slopes,
        basin_mean_slope=basin_mean_slope,
        basin_sd_slope=basin_sd_slope,
        mean_boxplots=_boxplots(years, yearly_mean),
        sd_boxplots=_boxplots(years, yearly_sd),
    )


def write_trend_report(report: TrendReport, csv_path, json_path) -> None:
    """Write per-cell slopes (``cell_id,slope_c_per_century``) and the JSON basin summary."""
    pd.DataFrame({
        "cell_id": np.arange(report.cell_slopes.size),
        "slope_c_per_century": report.cell_slopes,
    }).to_csv(csv_path, index=False, lineterminator="\n", float_format="%.9g")

    summary = report.model_dump(mode="json", exclude={"cell_slopes"})
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote trend report to {csv_path} and {json_path}")
