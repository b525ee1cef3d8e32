"""
twCRPS Module

Threshold-weighted continuous ranked probability score of a predictive CDF
evaluated at the design points x^1..x^n:

    twCRPS(F, x) = (1 / m) * sum_k (F(x^k) - 1{x <= x^k})^2 * w(x^k)

where m = n / (upper - lower) is the number of design points per degree
(100 for the default grid) and w(x) = Phi((x - center) / scale). The sum runs
left to right over k in extended precision, so a score is bit-identical
however the points are distributed over threads.
"""
from typing import Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from harness.exceptions import DataError, InvalidForecastError
from harness.model import DesignGrid, WeightSpec
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)

# Validation points scored per vectorized block
_SCORE_BLOCK = 4096


def weight(x, spec: WeightSpec = WeightSpec()):
    """w(x) = Phi((x - center) / scale)."""
    return ndtr((np.asarray(x, dtype=np.float64) - spec.center) / spec.scale)


def weight_vector(design: DesignGrid = DesignGrid(), spec: WeightSpec = WeightSpec()) -> np.ndarray:
    """w at every design point."""
    return weight(design.points, spec)


def check_forecast(pred: np.ndarray, design: DesignGrid) -> None:
    """
    Raise InvalidForecastError unless ``pred`` is a finite, nondecreasing
    vector (or matrix of row vectors) of values in [0, 1] on the design grid.
    """
    pred = np.asarray(pred)
    if pred.shape[-1] != design.n:
        raise InvalidForecastError(f"forecast has {pred.shape[-1]} values, expected {design.n}")
    if not np.isfinite(pred).all():
        raise InvalidForecastError("forecast contains non-finite values")
    if pred.min(initial=0.0) < 0.0 or pred.max(initial=1.0) > 1.0:
        raise InvalidForecastError("forecast values must lie in [0, 1]")
    if (np.diff(pred, axis=-1) < 0).any():
        raise InvalidForecastError("forecast is not nondecreasing")


def _score_rows(pred: np.ndarray, x_obs: np.ndarray, points: np.ndarray, weights: np.ndarray,
                per_unit: float) -> np.ndarray:
    indicator = (x_obs[:, None] <= points[None, :]).astype(np.float64)
    terms = np.square(pred.astype(np.float64) - indicator) * weights[None, :]
    totals = np.cumsum(terms.astype(np.longdouble), axis=1)[:, -1]
    return (totals / per_unit).astype(np.float64)


def twcrps(pred, x_obs: float, design: DesignGrid = DesignGrid(), spec: WeightSpec = WeightSpec()) -> float:
    """
    Score one predictive CDF against one observation.

    Args:
        pred: F(x^1..x^n)
        x_obs: observed value; it need not lie on the design grid
        design: design grid
        spec: weight function

    Returns:
        Nonnegative score

    Raises:
        InvalidForecastError: If ``pred`` is not a valid CDF vector
    """
    pred = np.asarray(pred, dtype=np.float64)
    check_forecast(pred, design)
    per_unit = design.n / (design.upper - design.lower)
    return float(_score_rows(pred[None, :], np.array([x_obs], dtype=np.float64), design.points,
                             weight_vector(design, spec), per_unit)[0])


def twcrps_batch(preds: np.ndarray, x_obs: np.ndarray, design: DesignGrid = DesignGrid(),
                 spec: WeightSpec = WeightSpec(), threads: int = 1) -> np.ndarray:
    """
    Per-point scores of a matrix of forecasts, one row per observation.

    Raises:
        InvalidForecastError: If any row is not a valid CDF vector
        DataError: If the numbers of rows and observations differ
    """
    preds = np.asarray(preds)
    x_obs = np.asarray(x_obs, dtype=np.float64)
    if preds.ndim != 2 or preds.shape[0] != x_obs.shape[0]:
        raise DataError(f"got forecasts of shape {preds.shape} for {x_obs.shape[0]} observations")
    check_forecast(preds, design)
    points = design.points
    weights = weight_vector(design, spec)
    per_unit = design.n / (design.upper - design.lower)
    out = np.empty(x_obs.shape[0], dtype=np.float64)

    def run(start, stop):
        for lo in range(start, stop, _SCORE_BLOCK):
            hi = min(lo + _SCORE_BLOCK, stop)
            out[lo:hi] = _score_rows(preds[lo:hi], x_obs[lo:hi], points, weights, per_unit)

    logger.debug(f"Scoring {x_obs.shape[0]} points on {threads} thread(s)")
    map_chunks(run, x_obs.shape[0], threads)
    return out


def aggregate(per_point: Sequence[float]) -> Tuple[float, float]:
    """
    Mean score over the validation set and its display value 10^4 * mean.

    Any infinite per-point score makes the aggregate infinite.

    Raises:
        DataError: If there is no score to aggregate
    """
    scores = np.asarray(per_point, dtype=np.float64)
    if scores.size == 0:
        raise DataError("cannot aggregate an empty list of scores")
    if np.isinf(scores).any():
        return np.inf, np.inf
    mean = float(scores.mean())
    return mean, 1e4 * mean
