"""
Neighbors Module

Fixed-radius disk neighbor tables over a Grid. For every cell the table lists
the cells whose center lies within the closed great-circle ball of radius
``radius_km`` (the cell itself included), in ascending cell_id order.

Candidates are pruned with latitude bands: the great-circle distance between
two points is never smaller than the meridional distance between their
latitudes, so cells further than ``radius_km / KM_PER_DEGREE`` degrees of
latitude away cannot qualify.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict

from harness.exceptions import AlignmentError
from harness.geometry.grid import KM_PER_DEGREE, Grid, haversine_radians
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)

# Slack on the latitude band, in degrees; the exact filter follows
_BAND_SLACK_DEG = 1e-9


class NeighborTable(BaseModel):
    """
    Disk neighborhoods in compressed sparse row form.

    ``indices[indptr[i]:indptr[i + 1]]`` are the neighbors of cell i.

    Attributes:
        radius_km: disk radius
        indptr: row pointers, length S + 1
        indices: concatenated neighbor lists
        grid_fingerprint: fingerprint of the grid the table was built on
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    radius_km: float
    indptr: np.ndarray
    indices: np.ndarray
    grid_fingerprint: str

    @property
    def n_cells(self) -> int:
        return int(self.indptr.shape[0] - 1)

    def offsets(self, cell_id: int) -> np.ndarray:
        """Sorted neighbor cell ids of ``cell_id``."""
        return self.indices[self.indptr[cell_id]:self.indptr[cell_id + 1]]

    def sizes(self) -> np.ndarray:
        """Number of neighbors per cell."""
        return np.diff(self.indptr)

    def check_grid(self, grid: Grid) -> None:
        """Raise AlignmentError unless the table was built for ``grid``."""
        if self.n_cells != grid.n_cells or self.grid_fingerprint != grid.fingerprint():
            raise AlignmentError(
                f"neighbor table ({self.n_cells} cells) was not built for this grid ({grid.n_cells} cells)"
            )


def build_neighbor_table(grid: Grid, radius_km: float, threads: int = 1) -> NeighborTable:
    """
    Build the closed-disk neighbor table of every cell.

    Args:
        grid: sea-cell grid
        radius_km: disk radius in km (>= 0)
        threads: worker threads; the table is identical for any value

    Returns:
        NeighborTable with sorted, symmetric neighbor lists

    Raises:
        ValueError: If radius_km is negative
    """
    if radius_km < 0:
        raise ValueError(f"radius_km must be nonnegative, got {radius_km}")
    logger.info(f"Building neighbor table for {grid.n_cells} cells, radius {radius_km} km")

    lam = np.radians(grid.lon)
    phi = np.radians(grid.lat)
    order = np.argsort(grid.lat, kind="stable")
    sorted_lat = grid.lat[order]
    band_deg = radius_km / KM_PER_DEGREE + _BAND_SLACK_DEG

    def build_chunk(start, stop):
        lists = []
        for cell_id in range(start, stop):
            lo = np.searchsorted(sorted_lat, grid.lat[cell_id] - band_deg, side="left")
            hi = np.searchsorted(sorted_lat, grid.lat[cell_id] + band_deg, side="right")
            candidates = order[lo:hi]
            distance = haversine_radians(lam[cell_id], phi[cell_id], lam[candidates], phi[candidates])
            lists.append(np.sort(candidates[distance <= radius_km]))
        return lists

    neighbor_lists = [row for chunk in map_chunks(build_chunk, grid.n_cells, threads) for row in chunk]
    sizes = np.array([len(row) for row in neighbor_lists], dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    indices = (np.concatenate(neighbor_lists) if neighbor_lists else np.empty(0)).astype(np.int64)

    if grid.n_cells:
        logger.info(
            f"Neighbor table built: {indices.size} entries, "
            f"min/mean/max disk size {sizes.min()}/{sizes.mean():.1f}/{sizes.max()}"
        )
    return NeighborTable(
        radius_km=float(radius_km),
        indptr=indptr,
        indices=indices,
        grid_fingerprint=grid.fingerprint(),
    )
