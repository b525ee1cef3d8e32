"""
Submission Module

Reading, writing and validating predictive-CDF submissions.

Binary layout (``XTSB``), little-endian:

    magic     4 bytes  b"XTSB"
    version   u32      1
    n_points  u32
    payload   n_points rows of 400 float32, row i = point_id i

A CSV alternative with header ``point_id,f001,...,f400`` is accepted and
converted on read.

Validity problems are reported as a SubmissionCheck, never raised: an invalid
submission still gets a leaderboard entry (scored +inf). Only a file that
cannot be read at all raises SubmissionIOError.
"""
import os
import struct
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from harness.exceptions import SubmissionIOError
from harness.model import DesignGrid, SubmissionCheck
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

SUBMISSION_MAGIC = b"XTSB"
SUBMISSION_VERSION = 1
_HEADER = struct.Struct("<4sII")

# Values this far outside [0, 1] are clamped onto the bounds before validation
CLAMP_TOLERANCE = 1e-9


class SubmissionParseError(ValueError):
    """A submission file was read but its content could not be parsed."""

    def __init__(self, reason: str, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


def csv_columns(n_design: int = 400):
    return ["point_id"] + [f"f{k:03d}" for k in range(1, n_design + 1)]


def write_submission(preds: np.ndarray, path) -> None:
    """Write an n_points x 400 matrix in the XTSB layout."""
    preds = np.ascontiguousarray(preds, dtype="<f4")
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as f:
        f.write(_HEADER.pack(SUBMISSION_MAGIC, SUBMISSION_VERSION, preds.shape[0]))
        f.write(preds.tobytes())
    os.replace(tmp_path, path)
    logger.info(f"Wrote submission with {preds.shape[0]} rows to {path}")


def write_submission_csv(preds: np.ndarray, path) -> None:
    preds = np.asarray(preds, dtype=np.float32)
    frame = pd.DataFrame(preds, columns=csv_columns(preds.shape[1])[1:])
    frame.insert(0, "point_id", np.arange(preds.shape[0]))
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.9g")
    logger.info(f"Wrote CSV submission with {preds.shape[0]} rows to {path}")


def _parse_binary(blob: bytes, n_design: int) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise SubmissionParseError("parse", f"truncated header ({len(blob)} bytes)")
    magic, version, n_points = _HEADER.unpack_from(blob, 0)
    if version != SUBMISSION_VERSION:
        raise SubmissionParseError("parse", f"unsupported version {version}")
    payload = len(blob) - _HEADER.size
    row_bytes = 4 * n_design
    declared = n_points * row_bytes
    if payload < declared:
        raise SubmissionParseError(
            "row count", f"header declares {n_points} rows ({declared} bytes), file holds {payload} bytes"
        )
    if payload % row_bytes:
        raise SubmissionParseError("parse", f"payload of {payload} bytes is not a whole number of rows")
    n_rows = payload // row_bytes
    if n_rows != n_points:
        raise SubmissionParseError("row count", f"header declares {n_points} rows, file holds {n_rows}")
    return np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n_rows, n_design).astype(np.float64)


def _parse_csv(path, n_design: int) -> np.ndarray:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SubmissionParseError("parse", str(e)) from e
    expected = csv_columns(n_design)
    if list(frame.columns[:1]) != ["point_id"]:
        raise SubmissionParseError("parse", "first column must be point_id")
    if list(frame.columns) != expected:
        raise SubmissionParseError("row width", f"rows have {frame.shape[1] - 1} values, expected {n_design}")
    if not np.array_equal(frame["point_id"].to_numpy(), np.arange(len(frame))):
        raise SubmissionParseError("parse", "point ids must be 0..n-1 in ascending order")
    try:
        return frame[expected[1:]].to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise SubmissionParseError("parse", f"non-numeric value: {e}") from e


def read_submission(path, design: DesignGrid = DesignGrid()) -> np.ndarray:
    """
    Read a submission in either format as an n_points x n float64 matrix.

    Raises:
        SubmissionIOError: If the file cannot be read
        SubmissionParseError: If its content cannot be parsed
    """
    try:
        with open(path, "rb") as f:
            head = f.read(len(SUBMISSION_MAGIC))
            blob = head + f.read() if head == SUBMISSION_MAGIC else None
    except OSError as e:
        logger.error(f"Cannot read submission {path}: {e}")
        raise SubmissionIOError(f"cannot read submission {path}: {e}") from e
    if blob is not None:
        return _parse_binary(blob, design.n)
    return _parse_csv(path, design.n)


def clamp_near_bounds(preds: np.ndarray) -> np.ndarray:
    """Snap values within CLAMP_TOLERANCE outside [0, 1] onto the bounds."""
    preds = preds.copy()
    preds[(preds < 0.0) & (preds >= -CLAMP_TOLERANCE)] = 0.0
    preds[(preds > 1.0) & (preds <= 1.0 + CLAMP_TOLERANCE)] = 1.0
    return preds


def check_predictions(preds: np.ndarray, expected_n_points: int, design: DesignGrid = DesignGrid()) -> SubmissionCheck:
    """Validity of an already parsed (and clamped) prediction matrix."""
    if preds.shape[0] != expected_n_points:
        return SubmissionCheck(ok=False, reason="row count",
                               detail=f"got {preds.shape[0]} rows, expected {expected_n_points}")
    if preds.ndim != 2 or preds.shape[1] != design.n:
        return SubmissionCheck(ok=False, reason="row width", detail=f"rows must have {design.n} values")
    bad = ~np.isfinite(preds)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        return SubmissionCheck(ok=False, reason="non-finite", detail=f"row {row}, f{col + 1:03d}")
    bad = (preds < 0.0) | (preds > 1.0)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        return SubmissionCheck(ok=False, reason="out of range",
                               detail=f"row {row}, f{col + 1:03d} = {preds[row, col]!r}")
    bad = np.diff(preds, axis=1) < 0
    if bad.any():
        row, col = np.argwhere(bad)[0]
        return SubmissionCheck(ok=False, reason="monotonicity",
                               detail=f"row {row}: f{col + 1:03d} > f{col + 2:03d}")
    return SubmissionCheck(ok=True)


def load_submission(path, expected_n_points: int,
                    design: DesignGrid = DesignGrid()) -> Tuple[SubmissionCheck, Optional[np.ndarray]]:
    """
    Read and validate a submission.

    Returns:
        (check, predictions); predictions are the clamped matrix when valid, else None

    Raises:
        SubmissionIOError: If the file cannot be read
    """
    try:
        preds = read_submission(path, design)
    except SubmissionParseError as e:
        check = SubmissionCheck(ok=False, reason=e.reason, detail=e.detail)
    else:
        preds = clamp_near_bounds(preds)
        check = check_predictions(preds, expected_n_points, design)
    if not check.ok:
        logger.warning(f"Submission {path} is invalid ({check.reason}): {check.detail}")
        return check, None
    logger.info(f"Submission {path} is valid ({expected_n_points} rows)")
    return check, preds


def validate_submission(path, expected_n_points: int, design: DesignGrid = DesignGrid()) -> SubmissionCheck:
    """
    Check a submission file: parseable, expected row count, n values per
    row, finite values in [0, 1] after clamping, nondecreasing rows.

    Raises:
        SubmissionIOError: If the file cannot be read
    """
    return load_submission(path, expected_n_points, design)[0]
