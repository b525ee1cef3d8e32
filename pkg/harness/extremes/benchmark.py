"""
Benchmark Module

The reference forecast: one empirical CDF of all space-time minima with a
complete neighborhood, pooled over space and time and issued unchanged for
every validation point.

Minima are counted in the 401 bins cut by the design points instead of being
stored; the forecast is only ever read at the design points, so nothing is
lost. Bin b (0..400) holds the values with exactly b design points strictly
below them, i.e. (x^b, x^(b+1)] with x^0 = -inf and x^401 = +inf.
"""
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from harness.exceptions import AlignmentError, DataError
from harness.extremes.min_process import MinField
from harness.model import DesignGrid
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)


class PooledMinimaHistogram(BaseModel):
    """
    Counts of pooled minima per design bin.

    Attributes:
        counts: n + 1 integer counters
        total_n: number of pooled minima
        design: design grid the bins are cut by
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    counts: np.ndarray
    total_n: int
    design: DesignGrid = DesignGrid()

    @classmethod
    def from_values(cls, values: np.ndarray, design: DesignGrid = DesignGrid()) -> "PooledMinimaHistogram":
        """Histogram of the finite entries of ``values``."""
        values = np.asarray(values).ravel()
        values = values[~np.isnan(values)]
        bins = np.searchsorted(design.points, values, side="left")
        counts = np.bincount(bins, minlength=design.n + 1).astype(np.int64)
        return cls(counts=counts, total_n=int(values.size), design=design)

    def merge(self, other: "PooledMinimaHistogram") -> "PooledMinimaHistogram":
        if self.design != other.design:
            raise AlignmentError("cannot merge histograms over different design grids")
        return PooledMinimaHistogram(
            counts=self.counts + other.counts, total_n=self.total_n + other.total_n, design=self.design,
        )

    def to_frame(self) -> pd.DataFrame:
        """Bin table ``bin,lower,upper,count``; open ends are written as -inf/inf."""
        edges = np.concatenate([[-np.inf], self.design.points, [np.inf]])
        return pd.DataFrame({
            "bin": np.arange(self.design.n + 1),
            "lower": edges[:-1],
            "upper": edges[1:],
            "count": self.counts,
        })


def pool_minima(minfield: MinField, complete: np.ndarray, design: DesignGrid = DesignGrid(),
                threads: int = 1) -> PooledMinimaHistogram:
    """
    Bin every X(s, t) whose neighborhood is complete.

    Args:
        minfield: minimum process
        complete: T x S boolean array from complete_neighborhood_mask
        design: design grid
        threads: worker threads, split over days; per-chunk histograms are summed

    Raises:
        AlignmentError: If ``complete`` does not match the field
        DataError: If no point has a complete neighborhood
    """
    values = minfield.values
    if complete.shape != values.shape:
        raise AlignmentError(f"completeness mask {complete.shape} does not match the minimum field {values.shape}")

    def run(start, stop):
        slab = values[start:stop]
        return PooledMinimaHistogram.from_values(slab[complete[start:stop] & ~np.isnan(slab)], design)

    chunks = map_chunks(run, values.shape[0], threads)
    hist = chunks[0]
    for chunk in chunks[1:]:
        hist = hist.merge(chunk)
    if hist.total_n == 0:
        logger.error("No point has a complete neighborhood; the benchmark is undefined")
        raise DataError("no complete neighborhoods: cannot build the pooled-minima benchmark")
    logger.info(f"Pooled {hist.total_n} minima ({hist.total_n / values.size:.2%} of all points)")
    return hist


def benchmark_cdf(hist: PooledMinimaHistogram) -> np.ndarray:
    """
    F(x^k) = #(pooled minima <= x^k) / total_n for k = 1..n.

    Returns:
        Predictive CDF at the design points, length n
    """
    if hist.total_n <= 0:
        raise DataError("cannot take the CDF of an empty histogram")
    return np.cumsum(hist.counts)[:hist.design.n] / hist.total_n


def benchmark_predictions(cdf: np.ndarray, n_points: int) -> np.ndarray:
    """The same CDF for every validation point, n_points x n, float32."""
    return np.tile(np.asarray(cdf, dtype=np.float32), (n_points, 1))


def write_histogram(hist: PooledMinimaHistogram, path, extra: Optional[dict] = None) -> None:
    frame = hist.to_frame()
    for column, value in (extra or {}).items():
        frame[column] = value
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    logger.info(f"Wrote histogram of {hist.total_n} values to {path}")
