"""
Masking Module

Month-wise missing-data masks and the validation set.

For every month j a Gaussian random field Z_j is simulated on the grid and
truncated so that exactly round_half_up(alpha_j * S) cells, those with the
largest values, are marked missing for the whole month. Validation points are
then drawn among the masked cells on selected days of the month, so they can
never be part of the training data.

Random streams: month j (1-based) uses stream j for its field; the draw of
validation day t uses stream 10000 + t.
"""
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from harness.exceptions import AlignmentError, DataError
from harness.fields.calendar import Calendar
from harness.fields.store import Field
from harness.geometry.grid import Grid
from harness.model import CovarianceSpec
from harness.simulation.random_fields import GaussianFieldSample, GaussianFieldSimulator, stream_generator
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

VALIDATION_STREAM_OFFSET = 10_000

MASK_SUMMARY_COLUMNS = ["month_index", "alpha", "n_missing", "z_threshold"]


class MaskSchedule(BaseModel):
    """
    Missing cells of every month.

    Attributes:
        missing: n_months x S boolean array, True where the cell is masked for the month
        thresholds: truncation level z_j of each month (-inf when every cell is masked)
        alphas: target missing fraction alpha_j of each month
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    missing: np.ndarray
    thresholds: np.ndarray
    alphas: np.ndarray

    @property
    def n_months(self) -> int:
        return int(self.missing.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.missing.shape[1])

    def missing_counts(self) -> np.ndarray:
        return self.missing.sum(axis=1)

    def missing_cells(self, month: int) -> np.ndarray:
        """Sorted cell ids masked in 0-based month ``month``."""
        return np.flatnonzero(self.missing[month])

    def daily_missing(self, calendar: Calendar) -> np.ndarray:
        """T x S boolean array of the missing index set over ``calendar``."""
        self.check_calendar(calendar)
        return self.missing[calendar.month_index]

    def expected_missing_fraction(self, calendar: Calendar) -> float:
        """sum_j |M_j| * |T_j| / (S * T)."""
        self.check_calendar(calendar)
        days_per_month = np.bincount(calendar.month_index, minlength=self.n_months)
        return float((self.missing_counts() * days_per_month).sum() / (self.n_cells * calendar.n_days))

    def check_calendar(self, calendar: Calendar) -> None:
        if calendar.n_months != self.n_months:
            raise AlignmentError(f"schedule has {self.n_months} months but the calendar has {calendar.n_months}")

    def summary_frame(self) -> pd.DataFrame:
        """The mask summary table ``month_index,alpha,n_missing,z_threshold`` (1-based months)."""
        return pd.DataFrame({
            "month_index": np.arange(1, self.n_months + 1),
            "alpha": self.alphas,
            "n_missing": self.missing_counts(),
            "z_threshold": self.thresholds,
        })


class ValidationIndex(BaseModel):
    """
    Validation points, ordered by (date, cell_id); point_id is the position.

    Attributes:
        cell_ids: cell of each point
        days: 1-based day serial t of each point
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    cell_ids: np.ndarray
    days: np.ndarray

    @property
    def n_points(self) -> int:
        return int(self.cell_ids.shape[0])

    def to_frame(self, calendar: Calendar) -> pd.DataFrame:
        return pd.DataFrame({
            "point_id": np.arange(self.n_points),
            "cell_id": self.cell_ids,
            "date": [calendar.t_to_date(int(t)).isoformat() for t in self.days],
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, calendar: Calendar) -> "ValidationIndex":
        days = np.array([calendar.date_to_t(day) for day in frame["date"]], dtype=np.int64)
        return cls(cell_ids=frame["cell_id"].to_numpy(dtype=np.int64), days=days)


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from zero, on the decimal value of ``value``."""
    return int(Decimal(repr(value)).to_integral_value(rounding=ROUND_HALF_UP))


def exceedance_count(alpha: float, n_cells: int) -> int:
    """|M_j| = round_half_up(alpha * S), computed exactly in decimal arithmetic."""
    return int((Decimal(repr(alpha)) * n_cells).to_integral_value(rounding=ROUND_HALF_UP))


def default_alpha_schedule(
    calendar: Calendar,
    alpha_early: float = 0.20,
    alpha_late: float = 0.60,
    split_date: date = date(2007, 1, 1),
) -> np.ndarray:
    """
    Per-month missing fractions: ``alpha_early`` for months starting before
    ``split_date``, ``alpha_late`` from it on.
    """
    alphas = np.array([
        alpha_early if calendar.month_start(month) < split_date else alpha_late
        for month in range(calendar.n_months)
    ])
    logger.debug(
        f"Alpha schedule: {int((alphas == alpha_early).sum())} months at {alpha_early}, "
        f"{int((alphas != alpha_early).sum())} at {alpha_late}"
    )
    return alphas


def truncate_to_mask(z_field: GaussianFieldSample, alpha: float) -> Tuple[np.ndarray, float]:
    """
    Mark the round_half_up(alpha * S) cells with the largest values as missing.

    Ties in Z are broken by ascending cell id.

    Args:
        z_field: simulated Gaussian field
        alpha: target fraction in [0, 1]

    Returns:
        (missing, z_threshold): boolean mask of length S and the largest value
        left out of the mask (-inf when alpha = 1)
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    values = z_field.values
    n_cells = values.shape[0]
    n_missing = exceedance_count(alpha, n_cells)

    order = np.lexsort((np.arange(n_cells), -values))
    missing = np.zeros(n_cells, dtype=bool)
    missing[order[:n_missing]] = True
    threshold = float(values[order[n_missing]]) if n_missing < n_cells else -np.inf
    return missing, threshold


def build_mask_schedule(
    grid: Grid,
    calendar: Calendar,
    alphas: Sequence[float],
    cov: CovarianceSpec,
    seed: int,
    threads: int = 1,
) -> MaskSchedule:
    """
    Simulate one Gaussian field per month and truncate it at the month's fraction.

    Args:
        grid: sea-cell grid
        calendar: competition calendar
        alphas: missing fraction of every month
        cov: covariance of the mask fields
        seed: master seed
        threads: worker threads; the schedule does not depend on it

    Returns:
        MaskSchedule over all months of the calendar
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.shape[0] != calendar.n_months:
        raise AlignmentError(f"got {alphas.shape[0]} alphas for {calendar.n_months} months")
    logger.info(f"Building mask schedule for {calendar.n_months} months on {grid.n_cells} cells")

    simulator = GaussianFieldSimulator(grid, cov)
    stream_ids = list(range(1, calendar.n_months + 1))
    samples = simulator.sample_many(seed, stream_ids, threads)

    missing = np.zeros((calendar.n_months, grid.n_cells), dtype=bool)
    thresholds = np.empty(calendar.n_months)
    for month, (sample, alpha) in enumerate(zip(samples, alphas)):
        missing[month], thresholds[month] = truncate_to_mask(sample, float(alpha))

    schedule = MaskSchedule(missing=missing, thresholds=thresholds, alphas=alphas)
    logger.info(f"Mask schedule built: expected missing fraction {schedule.expected_missing_fraction(calendar):.4f}")
    return schedule


def apply_mask(anom: Field, schedule: MaskSchedule) -> Field:
    """
    Training field: NaN on every masked (cell, day) and wherever the input was
    already missing; all other values are copied bit for bit.

    Raises:
        AlignmentError: If the schedule does not match the field's cells or months
    """
    if schedule.n_cells != anom.n_cells:
        raise AlignmentError(f"schedule has {schedule.n_cells} cells but the field has {anom.n_cells}")
    masked = schedule.daily_missing(anom.calendar)
    training = np.where(masked, np.float32(np.nan), anom.values)
    logger.info(f"Applied mask: {masked.mean():.2%} of points masked, {np.isnan(training).mean():.2%} missing overall")
    return Field(values=training, calendar=anom.calendar)


def validation_days(
    calendar: Calendar,
    days_of_month: Sequence[int],
    period_start: Optional[date] = None,
    period_end: Optional[date] = None,
) -> List[int]:
    """1-based day serials in [period_start, period_end] whose day of month is listed."""
    start = period_start or calendar.start_date
    end = period_end or calendar.end_date
    wanted = set(days_of_month)
    return [
        t for t, day in enumerate(calendar.dates, start=1)
        if start <= day <= end and day.day in wanted
    ]


def sample_validation(
    schedule: MaskSchedule,
    calendar: Calendar,
    n_per_day: int,
    days_of_month: Sequence[int],
    period: Tuple[Optional[date], Optional[date]],
    seed: int,
    reuse_locations_within_month: bool = False,
) -> ValidationIndex:
    """
    Draw validation points among the masked cells.

    On every validation day t, ``n_per_day`` cells are drawn uniformly without
    replacement from the cells masked in t's month. With
    ``reuse_locations_within_month`` the draw of the month's first validation
    day is reused on its other validation days.

    Raises:
        DataError: If a month has fewer masked cells than ``n_per_day``, or the
            period lies outside the calendar
    """
    period_start, period_end = period
    for bound in (period_start, period_end):
        if bound is not None and not calendar.start_date <= bound <= calendar.end_date:
            raise DataError(f"validation period bound {bound} is outside the calendar")
    days = validation_days(calendar, days_of_month, period_start, period_end)
    logger.info(f"Sampling {n_per_day} validation cells on each of {len(days)} days")

    cell_ids, day_serials = [], []
    month_draws = {}
    for t in days:
        month = int(calendar.month_index[t - 1])
        pool = schedule.missing_cells(month)
        if n_per_day > pool.size:
            raise DataError(
                f"month {month + 1} has only {pool.size} masked cells, cannot draw {n_per_day} validation points"
            )
        if reuse_locations_within_month and month in month_draws:
            chosen = month_draws[month]
        else:
            generator = stream_generator(seed, VALIDATION_STREAM_OFFSET + t)
            chosen = np.sort(generator.choice(pool, size=n_per_day, replace=False))
            month_draws[month] = chosen
        cell_ids.append(chosen)
        day_serials.append(np.full(n_per_day, t, dtype=np.int64))

    index = ValidationIndex(
        cell_ids=np.concatenate(cell_ids).astype(np.int64) if cell_ids else np.empty(0, dtype=np.int64),
        days=np.concatenate(day_serials) if day_serials else np.empty(0, dtype=np.int64),
    )
    logger.info(f"Validation index has {index.n_points} points")
    return index


def write_mask_summary(schedule: MaskSchedule, path) -> None:
    schedule.summary_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.9g")
    logger.info(f"Wrote mask summary for {schedule.n_months} months to {path}")
