"""
Minimum Process Module

X(s, t) = min of the anomaly over the space-time cylinder
N(s, t) = B(s, r) x {t - h, ..., t + h}, intersected with the grid and the
calendar. Windows near the ends of the series are truncated, not dropped.

Minima commute over a product neighborhood, so X is computed in two passes:
a sliding-window minimum along time for every cell, then a minimum over each
cell's precomputed disk for every day. Either order gives the same result.

Missing values follow one of two modes:
    ignore_missing     NaNs are skipped; a neighborhood with no observed value gives NaN
    require_complete   any NaN in the neighborhood gives NaN
"""
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from harness.exceptions import AlignmentError, MissingTruthError
from harness.fields.store import TRUTH_COLUMNS, Field
from harness.geometry.grid import Grid
from harness.geometry.neighbors import NeighborTable
from harness.model import CylinderSpec
from harness.preprocess.masking import ValidationIndex
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)


class NaMode(str, Enum):
    """
    Treatment of missing values inside a neighborhood.
    """
    IGNORE_MISSING = "ignore_missing"
    REQUIRE_COMPLETE = "require_complete"


class PassOrder(str, Enum):
    TEMPORAL_FIRST = "temporal_first"
    SPATIAL_FIRST = "spatial_first"


class MinField(BaseModel):
    """
    The minimum process X with its provenance.

    Attributes:
        field: X(s, t) as a Field
        cylinder: neighborhood it was computed over
        na_mode: missing-value mode used
        source: label of the input field
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    field: Field
    cylinder: CylinderSpec
    na_mode: NaMode
    source: str = ""

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _window_min_values(values: np.ndarray, half_window: int, na_mode: NaMode, threads: int) -> np.ndarray:
    if half_window == 0:
        return values.copy()
    size = 2 * half_window + 1
    out = np.empty_like(values)

    def run(start, stop):
        block = values[:, start:stop]
        missing = np.isnan(block)
        # +inf padding truncates the window at both ends of the series
        filled = np.where(missing, np.inf, block).astype(values.dtype)
        result = minimum_filter1d(filled, size=size, axis=0, mode="constant", cval=np.inf)
        if na_mode == NaMode.REQUIRE_COMPLETE:
            touched = maximum_filter1d(missing.view(np.uint8), size=size, axis=0, mode="constant", cval=0)
            result[touched.astype(bool)] = np.nan
        else:
            result[np.isposinf(result)] = np.nan
        out[:, start:stop] = result

    map_chunks(run, values.shape[1], threads)
    return out


def _disk_min_values(values: np.ndarray, neighbors: NeighborTable, na_mode: NaMode, threads: int) -> np.ndarray:
    reduce = np.fmin.reduce if na_mode == NaMode.IGNORE_MISSING else np.minimum.reduce
    out = np.empty_like(values)

    def run(start, stop):
        slab = values[start:stop]
        for cell_id in range(neighbors.n_cells):
            out[start:stop, cell_id] = reduce(slab[:, neighbors.offsets(cell_id)], axis=1)

    map_chunks(run, values.shape[0], threads)
    return out


def _check_table(field: Field, neighbors: NeighborTable, grid: Optional[Grid]) -> None:
    if neighbors.n_cells != field.n_cells:
        raise AlignmentError(f"neighbor table has {neighbors.n_cells} cells but the field has {field.n_cells}")
    if grid is not None:
        neighbors.check_grid(grid)
        field.check_grid(grid)


def temporal_window_min(anom: Field, half_window: int, na_mode: NaMode = NaMode.IGNORE_MISSING,
                        threads: int = 1) -> Field:
    """
    Per-cell sliding minimum over {t - h, ..., t + h} intersected with 1..T.

    Args:
        anom: input field
        half_window: h >= 0
        na_mode: missing-value mode
        threads: worker threads, split over cells

    Returns:
        Field of window minima
    """
    if half_window < 0:
        raise ValueError(f"half_window must be nonnegative, got {half_window}")
    logger.debug(f"Temporal window minimum, h={half_window}, {na_mode.value}")
    values = _window_min_values(anom.values, half_window, NaMode(na_mode), threads)
    return Field(values=values, calendar=anom.calendar)


def spatial_disk_min(tmin: Field, neighbors: NeighborTable, na_mode: NaMode = NaMode.IGNORE_MISSING,
                     threads: int = 1, grid: Optional[Grid] = None,
                     cylinder: Optional[CylinderSpec] = None, source: str = "") -> MinField:
    """
    Per-day minimum over each cell's disk.

    Raises:
        AlignmentError: If the neighbor table does not belong to the field's grid
    """
    _check_table(tmin, neighbors, grid)
    logger.debug(f"Spatial disk minimum, r={neighbors.radius_km} km, {NaMode(na_mode).value}")
    values = _disk_min_values(tmin.values, neighbors, NaMode(na_mode), threads)
    return MinField(
        field=Field(values=values, calendar=tmin.calendar),
        cylinder=cylinder or CylinderSpec(radius_km=neighbors.radius_km, half_window_days=0),
        na_mode=na_mode,
        source=source,
    )


def minimum_process(
    anom: Field,
    neighbors: NeighborTable,
    half_window: int,
    na_mode: NaMode = NaMode.IGNORE_MISSING,
    threads: int = 1,
    grid: Optional[Grid] = None,
    order: PassOrder = PassOrder.TEMPORAL_FIRST,
    source: str = "",
) -> MinField:
    """
    The minimum process X over the cylinder of radius ``neighbors.radius_km``
    and half window ``half_window``.

    Args:
        anom: anomaly field (masked or not)
        neighbors: disk table of the field's grid
        half_window: temporal half window h
        na_mode: missing-value mode
        threads: worker threads; the result does not depend on it
        grid: if given, the table and field are checked against it
        order: which pass runs first
        source: provenance label

    Returns:
        MinField holding X
    """
    _check_table(anom, neighbors, grid)
    na_mode = NaMode(na_mode)
    logger.info(
        f"Computing minimum process on {anom.n_days}x{anom.n_cells} "
        f"(r={neighbors.radius_km} km, h={half_window}, {na_mode.value}, {PassOrder(order).value})"
    )
    if PassOrder(order) == PassOrder.TEMPORAL_FIRST:
        values = _disk_min_values(_window_min_values(anom.values, half_window, na_mode, threads),
                                  neighbors, na_mode, threads)
    else:
        values = _window_min_values(_disk_min_values(anom.values, neighbors, na_mode, threads),
                                    half_window, na_mode, threads)
    minfield = MinField(
        field=Field(values=values, calendar=anom.calendar),
        cylinder=CylinderSpec(radius_km=neighbors.radius_km, half_window_days=half_window),
        na_mode=na_mode,
        source=source,
    )
    logger.info(f"Minimum process done: {minfield.field.missing_fraction():.2%} undefined")
    return minfield


def complete_neighborhood_mask(masked_anom: Field, neighbors: NeighborTable, half_window: int,
                               threads: int = 1) -> np.ndarray:
    """
    T x S boolean array, True where every point of the (truncated) cylinder is observed.

    A 0/1 indicator with NaN at missing points is pushed through both passes
    in require_complete mode.
    """
    _check_table(masked_anom, neighbors, None)
    indicator = np.where(np.isnan(masked_anom.values), np.float32(np.nan), np.float32(0.0))
    values = _disk_min_values(
        _window_min_values(indicator, half_window, NaMode.REQUIRE_COMPLETE, threads),
        neighbors, NaMode.REQUIRE_COMPLETE, threads,
    )
    complete = ~np.isnan(values)
    logger.info(f"Complete neighborhoods: {int(complete.sum())} of {complete.size} ({complete.mean():.2%})")
    return complete


def extract_truth(minfield: MinField, index: ValidationIndex) -> pd.DataFrame:
    """
    Sample X at the validation points.

    Returns:
        Truth table ``point_id,x_true``

    Raises:
        AlignmentError: If a validation point lies outside the field
        MissingTruthError: If X is undefined at a validation point
    """
    values = minfield.values
    if index.n_points and (index.cell_ids.max() >= values.shape[1] or index.days.max() > values.shape[0]):
        raise AlignmentError("validation index refers to cells or days outside the minimum field")
    x_true = values[index.days - 1, index.cell_ids].astype(np.float64)
    undefined = np.flatnonzero(np.isnan(x_true))
    if undefined.size:
        logger.error(f"Minimum process is undefined at {undefined.size} validation points")
        raise MissingTruthError(
            f"X is undefined at {undefined.size} validation points (first point_id {int(undefined[0])})"
        )
    return pd.DataFrame({TRUTH_COLUMNS[0]: np.arange(index.n_points), TRUTH_COLUMNS[1]: x_true})
