"""
Data Models Module

This module defines the value types used throughout the harness
using Pydantic for data validation and serialization.

Array-bearing containers (grids, fields, schedules) live next to the code
that builds them; the models here are small, immutable and JSON-friendly.
"""
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class GeoPoint(BaseModel):
    """
    Geographic location of a grid-cell center.

    Attributes:
        lon: degrees east, in [-180, 180]
        lat: degrees north, in [-90, 90]
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    lon: float = Field(ge=-180.0, le=180.0)
    lat: float = Field(ge=-90.0, le=90.0)


class CovarianceFamily(str, Enum):
    """
    Supported isotropic correlation families.
    The string values match the expected values in the configuration.
    """
    EXPONENTIAL = "exponential"  # exp(-d / range)
    GAUSSIAN = "gaussian"        # exp(-(d / range)^2)


class CalendarKind(str, Enum):
    """
    Day-counting convention of a calendar.
    """
    GREGORIAN = "gregorian"  # leap days stored like any other day
    NOLEAP = "noleap"        # every Feb 29 dropped, 365 days per year


class CovarianceSpec(BaseModel):
    """
    Stationary isotropic covariance of a unit-variance Gaussian random field.

    The covariance between two cells at distance d is 1 when d = 0 and
    (1 - nugget) * rho(d / range_km) otherwise, so nugget = 1 gives i.i.d.
    standard normals.

    Attributes:
        family: correlation family
        range_km: correlation range in km
        nugget: share of the variance without spatial correlation, in [0, 1]
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: CovarianceFamily = CovarianceFamily.EXPONENTIAL
    range_km: float = Field(default=300.0, gt=0.0)
    nugget: float = Field(default=0.0, ge=0.0, le=1.0)


class CylinderSpec(BaseModel):
    """
    Space-time neighborhood used by the minimum process: a disk of
    ``radius_km`` crossed with the days ``t - h .. t + h``.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    radius_km: float = Field(default=50.0, ge=0.0)
    half_window_days: int = Field(default=3, ge=0)


class WeightSpec(BaseModel):
    """
    Weight function w(x) = Phi((x - center) / scale) of the threshold-weighted CRPS.

    Attributes:
        center: location of the weight's midpoint (degC)
        scale: spread of the weight's ramp (degC)
        threshold: extremeness threshold u the weight is meant to emphasise;
            documentation only, it does not enter the score
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    center: float = 1.5
    scale: float = Field(default=0.4, gt=0.0)
    threshold: float = 1.0


class DesignGrid(BaseModel):
    """
    Uniform design points at which predictive CDFs are evaluated.

    The points are ``lower + k / (n / (upper - lower))`` for k = 1..n, which for
    the defaults is exactly ``-1 + k / 100``.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    lower: float = -1.0
    upper: float = 3.0
    n: int = Field(default=400, gt=0)

    @model_validator(mode="after")
    def _check_interval(self):
        if not self.upper > self.lower:
            raise ValueError(f"design grid upper ({self.upper}) must exceed lower ({self.lower})")
        return self

    @property
    def width(self) -> float:
        """Spacing between consecutive design points."""
        return (self.upper - self.lower) / self.n

    @property
    def points(self) -> np.ndarray:
        per_unit = self.n / (self.upper - self.lower)
        return self.lower + np.arange(1, self.n + 1) / per_unit


class SynthConfig(BaseModel):
    """
    Parameters of a synthetic SST-like dataset.

    Y(s, t) = base + gradient * (lat - origin_lat) + seasonal(doy)
              + trend * t / 36525 + A(s, t)

    with A an AR(1)-in-time, Gaussian-random-field-in-space process whose
    stationary SD is ``anomaly_sd_c`` (optionally drifting by
    ``sd_trend_c_per_century``).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    rows: int = Field(default=20, gt=0)
    cols: int = Field(default=20, gt=0)
    origin_lon: float = Field(default=38.0, ge=-180.0, le=180.0)
    origin_lat: float = Field(default=20.0, ge=-90.0, le=90.0)
    spacing_deg: float = Field(default=0.05, gt=0.0)
    start_year: int = 1985
    years: int = Field(default=10, gt=0)
    calendar_kind: CalendarKind = CalendarKind.GREGORIAN
    base_c: float = 27.0
    seasonal_amplitude_c: float = 3.0
    seasonal_peak_day: int = Field(default=227, ge=1, le=365)
    meridional_gradient_c_per_deg: float = -0.5
    trend_c_per_century: float = 2.0
    sd_trend_c_per_century: float = 0.0
    anomaly_sd_c: float = Field(default=0.8, gt=0.0)
    anomaly_cov: CovarianceSpec = CovarianceSpec(range_km=100.0)
    ar_coefficient: float = Field(default=0.8, ge=0.0, lt=1.0)
    seed: int = 2019


class SubmissionCheck(BaseModel):
    """
    Outcome of validating a submission file.

    Attributes:
        ok: whether the submission is valid
        reason: short machine-readable reason when invalid ("row count", "monotonicity", ...)
        detail: human-readable context (offending row, value, ...)
    """
    ok: bool
    reason: Optional[str] = None
    detail: Optional[str] = None


class ScoreReport(BaseModel):
    """
    Score of one submission over the validation set.

    ``twcrps`` is the mean over validation points; ``score_e4`` is the
    display value 10^4 * twcrps. Invalid submissions carry +inf in both and
    an empty ``per_point`` array.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    team: str
    per_point: np.ndarray
    twcrps: float
    score_e4: float
    valid: bool = True
    reason: Optional[str] = None
    late: bool = False
    round: str = "final"
    rank: Optional[int] = None
    improvement_vs_reference: Optional[float] = None
    gap_to_next: Optional[float] = None


class RunRecord(BaseModel):
    """
    Machine-readable record printed by every command-line stage.

    Attributes:
        stage: subcommand name
        config_hash: SHA-256 of the resolved settings
        seed: master seed of the run
        wall_time_s: elapsed wall-clock seconds
        outputs: artifact file name -> SHA-256 digest
        details: stage-specific figures (counts, fractions, scores)
    """
    stage: str
    config_hash: str
    seed: int
    wall_time_s: float
    outputs: Dict[str, str] = {}
    details: Dict[str, Any] = {}
