"""
Field Store Module

In-memory representation and binary storage of gridded space-time fields
(raw temperature, mean surface, anomalies, minimum process).

Binary layout (``XTFD``), all integers little-endian:

    magic      4 bytes  b"XTFD"
    version    u32      1 (gregorian calendar) or 2 (header carries a calendar kind)
    S          u32      number of cells
    T          u32      number of days
    epoch_day  i64      days from 1970-01-01 to day t = 1
    kind       u32      version 2 only: 0 gregorian, 1 noleap
    payload    T blocks of S little-endian float32 values, day-major

Missing values are quiet NaNs and round-trip bit-exactly.
"""
import os
import struct
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from harness.exceptions import AlignmentError, DataError, FieldFormatError
from harness.fields.calendar import Calendar
from harness.geometry.grid import Grid
from harness.model import CalendarKind
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

FIELD_MAGIC = b"XTFD"
_HEADER = struct.Struct("<4sIIIq")
_KIND = struct.Struct("<I")
_KIND_CODES = {CalendarKind.GREGORIAN: 0, CalendarKind.NOLEAP: 1}

VALIDATION_COLUMNS = ["point_id", "cell_id", "date"]
TRUTH_COLUMNS = ["point_id", "x_true"]


class Field(BaseModel):
    """
    T x S array of float32 values over a calendar and a grid of S cells.

    Attributes:
        values: day-major float32 array, NaN where missing
        calendar: calendar of the T rows
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    calendar: Calendar

    @model_validator(mode="after")
    def _check_shape(self):
        if self.values.ndim != 2:
            raise ValueError(f"field values must be 2-d (T x S), got shape {self.values.shape}")
        if self.values.dtype != np.float32:
            raise ValueError(f"field values must be float32, got {self.values.dtype}")
        if self.values.shape[0] != self.calendar.n_days:
            raise ValueError(f"field has {self.values.shape[0]} days but the calendar has {self.calendar.n_days}")
        return self

    @classmethod
    def from_array(cls, values, calendar: Calendar) -> "Field":
        """Build a Field from any real array, storing it as float32."""
        return cls(values=np.ascontiguousarray(values, dtype=np.float32), calendar=calendar)

    @property
    def n_days(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.values.shape[1])

    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def missing_fraction(self) -> float:
        return float(self.missing().mean()) if self.values.size else 0.0

    def as_float64(self) -> np.ndarray:
        return self.values.astype(np.float64)

    def check_grid(self, grid: Grid) -> None:
        if self.n_cells != grid.n_cells:
            raise AlignmentError(f"field has {self.n_cells} cells but the grid has {grid.n_cells}")

    def check_aligned(self, other: "Field") -> None:
        """Raise AlignmentError unless both fields share cells and calendar."""
        if self.values.shape != other.values.shape or self.calendar != other.calendar:
            raise AlignmentError(
                f"fields are not aligned: {self.values.shape} over {self.calendar.start_date}"
                f" vs {other.values.shape} over {other.calendar.start_date}"
            )

    def check_bounds(self, lower: float, upper: float, label: str = "field") -> None:
        """Raise DataError if a finite value lies outside [lower, upper]."""
        finite = self.values[np.isfinite(self.values)]
        if finite.size and (finite.min() < lower or finite.max() > upper):
            raise DataError(
                f"{label} values span [{finite.min():.3f}, {finite.max():.3f}], outside the bounds [{lower}, {upper}]"
            )
        if np.isinf(self.values).any():
            raise DataError(f"{label} contains infinite values")


def write_field(field: Field, path) -> None:
    """
    Write a field in the XTFD layout.

    The file is written next to its destination and moved into place, so
    readers never observe a partial file.
    """
    path = Path(path)
    kind = field.calendar.kind
    version = 1 if kind == CalendarKind.GREGORIAN else 2
    header = _HEADER.pack(FIELD_MAGIC, version, field.n_cells, field.n_days, field.calendar.epoch_day)
    if version == 2:
        header += _KIND.pack(_KIND_CODES[kind])

    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(field.values, dtype="<f4").tobytes())
    os.replace(tmp_path, path)
    logger.info(f"Wrote field {field.n_days}x{field.n_cells} ({field.missing_fraction():.1%} missing) to {path}")


def read_field(path, grid: Optional[Grid] = None, calendar: Optional[Calendar] = None) -> Field:
    """
    Read an XTFD field.

    Args:
        path: file to read
        grid: if given, the field must have the grid's cell count
        calendar: if given, the field's calendar must equal it

    Returns:
        The stored Field

    Raises:
        FieldFormatError: On bad magic, unknown version or a truncated/oversized payload
        AlignmentError: If the field does not match the supplied grid or calendar
        DataError: If the file cannot be read
    """
    logger.debug(f"Reading field from {path}")
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        logger.error(f"Cannot read field file {path}: {e}")
        raise DataError(f"cannot read field file {path}: {e}") from e

    if len(blob) < _HEADER.size:
        raise FieldFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, n_cells, n_days, epoch_day = _HEADER.unpack_from(blob, 0)
    if magic != FIELD_MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    offset = _HEADER.size
    if version == 1:
        kind = CalendarKind.GREGORIAN
    elif version == 2:
        if len(blob) < offset + _KIND.size:
            raise FieldFormatError(f"{path}: truncated header")
        (code,) = _KIND.unpack_from(blob, offset)
        offset += _KIND.size
        kinds = {value: key for key, value in _KIND_CODES.items()}
        if code not in kinds:
            raise FieldFormatError(f"{path}: unknown calendar kind {code}")
        kind = kinds[code]
    else:
        raise FieldFormatError(f"{path}: unsupported version {version}")

    expected = offset + 4 * n_cells * n_days
    if len(blob) != expected:
        raise FieldFormatError(f"{path}: payload is {len(blob) - offset} bytes, expected {expected - offset}")
    if n_days == 0:
        raise FieldFormatError(f"{path}: field has no days")

    values = np.frombuffer(blob, dtype="<f4", count=n_cells * n_days, offset=offset)
    field = Field(
        values=values.reshape(n_days, n_cells).astype(np.float32),
        calendar=Calendar.from_epoch_day(epoch_day, n_days, kind),
    )
    if grid is not None:
        field.check_grid(grid)
    if calendar is not None and field.calendar != calendar:
        raise AlignmentError(f"{path}: calendar {field.calendar} does not match the expected {calendar}")
    logger.info(f"Read field {n_days}x{n_cells} from {path}")
    return field


def _read_table(path, columns, label) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Cannot read {label} file {path}: {e}")
        raise DataError(f"cannot read {label} file {path}: {e}") from e
    if list(df.columns) != columns:
        raise DataError(f"{label} file {path} must have header {','.join(columns)}, got {','.join(df.columns)}")
    if not np.array_equal(df["point_id"].to_numpy(), np.arange(len(df))):
        raise DataError(f"{label} file {path}: point ids must be 0..{len(df) - 1} in ascending order")
    return df


def write_validation_csv(frame: pd.DataFrame, path) -> None:
    """Write the validation index table ``point_id,cell_id,date`` (ISO dates)."""
    frame[VALIDATION_COLUMNS].to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} validation points to {path}")


def read_validation_csv(path) -> pd.DataFrame:
    """Read the validation index table; dates are returned as ``datetime.date``."""
    df = _read_table(path, VALIDATION_COLUMNS, "validation index")
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d").dt.date
    logger.info(f"Read {len(df)} validation points from {path}")
    return df


def write_truth_csv(frame: pd.DataFrame, path) -> None:
    """Write the truth table ``point_id,x_true``."""
    frame[TRUTH_COLUMNS].to_csv(path, index=False, lineterminator="\n", float_format="%.9g")
    logger.info(f"Wrote {len(frame)} truth values to {path}")


def read_truth_csv(path) -> pd.DataFrame:
    df = _read_table(path, TRUTH_COLUMNS, "truth")
    logger.info(f"Read {len(df)} truth values from {path}")
    return df
