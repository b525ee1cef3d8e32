"""
Grid Module

The spatial domain: an ordered set of sea grid cells with geographic
coordinates, the haversine metric between them, and the grid CSV format
``cell_id,lon_deg,lat_deg``. Land cells are simply not part of a Grid.
"""
import hashlib
from typing import List

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from harness.exceptions import DataError
from harness.model import GeoPoint
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

EARTH_RADIUS_KM = 6371.0

# Great-circle length of one degree of latitude
KM_PER_DEGREE = 2.0 * np.pi * EARTH_RADIUS_KM / 360.0

GRID_COLUMNS = ["cell_id", "lon_deg", "lat_deg"]


def haversine_km_array(lon1, lat1, lon2, lat2) -> np.ndarray:
    """
    Vectorised great-circle distance in km between points given in degrees.

    Absolute coordinate differences are used so that the result is bitwise
    symmetric in its two endpoints.
    """
    phi1 = np.radians(np.asarray(lat1, dtype=np.float64))
    phi2 = np.radians(np.asarray(lat2, dtype=np.float64))
    lam1 = np.radians(np.asarray(lon1, dtype=np.float64))
    lam2 = np.radians(np.asarray(lon2, dtype=np.float64))
    return haversine_radians(lam1, phi1, lam2, phi2)


def haversine_radians(lam1, phi1, lam2, phi2) -> np.ndarray:
    dphi = np.abs(phi2 - phi1)
    dlam = np.abs(lam2 - lam1)
    a = np.sin(dphi / 2.0) ** 2 + (np.cos(phi1) * np.cos(phi2)) * np.sin(dlam / 2.0) ** 2
    a = np.clip(a, 0.0, 1.0)
    return EARTH_RADIUS_KM * 2.0 * np.arctan2(np.sqrt(a), np.sqrt(1.0 - a))


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """
    Great-circle distance between two points on a sphere of radius 6371 km.

    Args:
        a: first point
        b: second point

    Returns:
        Distance in km, symmetric and nonnegative
    """
    return float(haversine_km_array(a.lon, a.lat, b.lon, b.lat))


class Grid(BaseModel):
    """
    Ordered sea cells; cell_id is the position in ``lon``/``lat`` (0..S-1).

    Attributes:
        lon: cell-center longitudes in degrees east
        lat: cell-center latitudes in degrees north
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lon: np.ndarray
    lat: np.ndarray

    @model_validator(mode="after")
    def _check_cells(self):
        if self.lon.ndim != 1 or self.lon.shape != self.lat.shape:
            raise ValueError(f"lon/lat must be 1-d arrays of equal length, got {self.lon.shape} and {self.lat.shape}")
        if not (np.all(np.isfinite(self.lon)) and np.all(np.isfinite(self.lat))):
            raise ValueError("cell coordinates must be finite")
        if np.any(np.abs(self.lon) > 180.0) or np.any(np.abs(self.lat) > 90.0):
            raise ValueError("cell coordinates out of range")
        pairs = np.stack([self.lon, self.lat], axis=1)
        if len(np.unique(pairs, axis=0)) != len(pairs):
            raise ValueError("two cells share identical coordinates")
        return self

    @property
    def n_cells(self) -> int:
        return int(self.lon.shape[0])

    @property
    def cells(self) -> List[GeoPoint]:
        return [GeoPoint(lon=float(x), lat=float(y)) for x, y in zip(self.lon, self.lat)]

    def cell(self, cell_id: int) -> GeoPoint:
        return GeoPoint(lon=float(self.lon[cell_id]), lat=float(self.lat[cell_id]))

    def fingerprint(self) -> str:
        """SHA-256 over the coordinate arrays; equal grids have equal fingerprints."""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.lon, dtype="<f8").tobytes())
        digest.update(np.ascontiguousarray(self.lat, dtype="<f8").tobytes())
        return digest.hexdigest()

    @classmethod
    def from_points(cls, points: List[GeoPoint]) -> "Grid":
        return cls(
            lon=np.array([p.lon for p in points], dtype=np.float64),
            lat=np.array([p.lat for p in points], dtype=np.float64),
        )


def regular_grid(rows: int, cols: int, origin_lon: float, origin_lat: float, spacing_deg: float) -> Grid:
    """
    Build a rows x cols lattice; cell_id = row * cols + col, rows run northwards.

    Args:
        rows: number of latitude rows
        cols: number of longitude columns
        origin_lon: longitude of the south-west cell center
        origin_lat: latitude of the south-west cell center
        spacing_deg: lattice spacing in degrees (both directions)

    Returns:
        A Grid with rows * cols cells
    """
    row_index, col_index = np.divmod(np.arange(rows * cols), cols)
    logger.debug(f"Building regular grid {rows}x{cols} at ({origin_lon}, {origin_lat}), spacing {spacing_deg} deg")
    return Grid(
        lon=origin_lon + col_index * spacing_deg,
        lat=origin_lat + row_index * spacing_deg,
    )


def write_grid(grid: Grid, path) -> None:
    """Write the grid CSV (``cell_id,lon_deg,lat_deg``, LF line endings)."""
    df = pd.DataFrame({
        "cell_id": np.arange(grid.n_cells),
        "lon_deg": grid.lon,
        "lat_deg": grid.lat,
    })
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    logger.info(f"Wrote grid with {grid.n_cells} cells to {path}")


def read_grid(path) -> Grid:
    """
    Read a grid CSV.

    Raises:
        DataError: If the file is missing, has the wrong header, or cell ids are
            not the contiguous sequence 0..S-1 in order
    """
    logger.debug(f"Reading grid from {path}")
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Cannot read grid file {path}: {e}")
        raise DataError(f"cannot read grid file {path}: {e}") from e

    if list(df.columns) != GRID_COLUMNS:
        raise DataError(f"grid file {path} must have header {','.join(GRID_COLUMNS)}, got {','.join(df.columns)}")
    if not np.array_equal(df["cell_id"].to_numpy(), np.arange(len(df))):
        raise DataError(f"grid file {path}: cell ids must be 0..{len(df) - 1} in ascending order")
    try:
        grid = Grid(lon=df["lon_deg"].to_numpy(dtype=np.float64), lat=df["lat_deg"].to_numpy(dtype=np.float64))
    except ValueError as e:
        raise DataError(f"grid file {path}: {e}") from e
    logger.info(f"Read grid with {grid.n_cells} cells from {path}")
    return grid
