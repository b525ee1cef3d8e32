"""
Random Fields Module

Simulation of stationary isotropic Gaussian random fields on a Grid by dense
Cholesky factorization of the covariance matrix.

Random streams: every sample is keyed by (master seed, stream id). The stream
is a Philox counter-based generator seeded from
``SeedSequence(seed, spawn_key=(stream_id,))``; distinct stream ids give
statistically independent streams and a given key always reproduces the same
numbers, whatever the execution order or thread count. Standard normals are
drawn by the inverse-CDF transform of uniforms on the open interval (0, 1), so
a stream never consumes a variable number of draws.
"""
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import lapack
from scipy.special import ndtri

from harness.exceptions import CapExceededError, FactorizationError
from harness.geometry.grid import Grid, haversine_radians
from harness.model import CovarianceSpec
from harness.simulation.covariance import get_covariance_model
from harness.utils.logging_config import get_logger
from harness.utils.parallel import map_chunks

logger = get_logger(__name__)

# Largest grid the dense backend accepts
MAX_DENSE_CELLS = 20_000

# Diagonal jitter tried, in order, before a factorization is declared failed
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

# Streams multiplied by the factor in one matrix product
_SAMPLE_BLOCK = 256

_UNIFORM_BITS = 52


class GaussianFieldSample(BaseModel):
    """
    One realization of a unit-variance Gaussian random field.

    Attributes:
        values: length-S vector
        seed: master seed the sample was drawn with
        stream_id: stream the sample was drawn from
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    seed: int
    stream_id: int


def stream_generator(seed: int, stream_id: int) -> np.random.Generator:
    """Counter-based generator for stream ``stream_id`` of master seed ``seed``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
    return np.random.Generator(np.random.Philox(sequence))


def standard_normals(seed: int, stream_id: int, size: int) -> np.ndarray:
    """
    ``size`` i.i.d. standard normals from one stream, by inverse-CDF transform.

    Uniforms are (k + 1/2) / 2^52 with k uniform on 0..2^52-1, so they never
    reach 0 or 1.
    """
    generator = stream_generator(seed, stream_id)
    k = generator.integers(0, 2 ** _UNIFORM_BITS, size=size, dtype=np.int64)
    return ndtri((k + 0.5) / 2.0 ** _UNIFORM_BITS)


def distance_matrix_km(grid: Grid) -> np.ndarray:
    """All-pairs great-circle distances, S x S."""
    lam = np.radians(grid.lon)
    phi = np.radians(grid.lat)
    return haversine_radians(lam[:, None], phi[:, None], lam[None, :], phi[None, :])


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of ``cov``, escalating the diagonal jitter on failure.

    Raises:
        FactorizationError: If every jitter level fails; carries the order of the
            leading minor that was not positive definite at the last attempt
    """
    info = 0
    for jitter in JITTER_LADDER:
        attempt = cov + jitter * np.eye(cov.shape[0]) if jitter else cov
        factor, info = lapack.dpotrf(attempt, lower=1, clean=1)
        if info == 0:
            if jitter:
                logger.warning(f"Covariance factorized only after adding jitter {jitter:g} to the diagonal")
            return factor
        if info < 0:
            raise FactorizationError(f"dpotrf rejected argument {-info}", leading_minor=0)
        logger.debug(f"Cholesky failed at leading minor {info} with jitter {jitter:g}")
    logger.error(f"Covariance matrix is not positive definite: leading minor {info} failed")
    raise FactorizationError(
        f"covariance matrix is not positive definite (leading minor of order {info}) "
        f"even with jitter {JITTER_LADDER[-1]:g}",
        leading_minor=int(info),
    )


class GaussianFieldSimulator:
    """
    Draws Gaussian random field samples on a fixed grid.

    The covariance matrix is built and factorized once; every sample is then a
    product of the factor with a stream of standard normals.
    """

    def __init__(self, grid: Grid, spec: CovarianceSpec):
        """
        Build and factorize the covariance matrix.

        Args:
            grid: nonempty grid with at most MAX_DENSE_CELLS cells
            spec: covariance specification

        Raises:
            CapExceededError: If the grid is too large for the dense backend
            FactorizationError: If the covariance cannot be factorized
        """
        if grid.n_cells == 0:
            raise ValueError("cannot simulate on an empty grid")
        if grid.n_cells > MAX_DENSE_CELLS:
            raise CapExceededError(
                f"grid has {grid.n_cells} cells; the dense simulation backend is capped at {MAX_DENSE_CELLS}"
            )
        self.grid = grid
        self.spec = spec
        logger.info(
            f"Factorizing {spec.family.value} covariance (range {spec.range_km} km, nugget {spec.nugget}) "
            f"on {grid.n_cells} cells"
        )
        model = get_covariance_model(spec)
        self.factor = cholesky_with_jitter(model.covariance(distance_matrix_km(grid)))

    def sample(self, seed: int, stream_id: int) -> GaussianFieldSample:
        """Draw the sample of stream ``stream_id``."""
        return self.sample_many(seed, [stream_id])[0]

    def sample_matrix(self, seed: int, stream_ids: Sequence[int], threads: int = 1) -> np.ndarray:
        """
        Samples of several streams as a len(stream_ids) x S array.

        Streams are processed in fixed blocks, so row i depends only on
        (seed, stream_ids[i]) and the block layout, never on ``threads``.
        """
        stream_ids = list(stream_ids)
        n_cells = self.grid.n_cells
        out = np.empty((len(stream_ids), n_cells), dtype=np.float64)
        n_blocks = -(-len(stream_ids) // _SAMPLE_BLOCK)

        def run_blocks(start, stop):
            for block in range(start, stop):
                ids = stream_ids[block * _SAMPLE_BLOCK:(block + 1) * _SAMPLE_BLOCK]
                normals = np.stack([standard_normals(seed, stream_id, n_cells) for stream_id in ids])
                out[block * _SAMPLE_BLOCK:block * _SAMPLE_BLOCK + len(ids)] = normals @ self.factor.T

        map_chunks(run_blocks, n_blocks, threads, chunks_per_thread=1)
        return out

    def sample_many(self, seed: int, stream_ids: Sequence[int], threads: int = 1) -> List[GaussianFieldSample]:
        matrix = self.sample_matrix(seed, stream_ids, threads)
        return [
            GaussianFieldSample(values=row, seed=seed, stream_id=int(stream_id))
            for row, stream_id in zip(matrix, stream_ids)
        ]


def simulate_grf(grid: Grid, spec: CovarianceSpec, seed: int, stream_id: int) -> GaussianFieldSample:
    """
    Draw one Gaussian random field sample from N(0, Sigma), Sigma_ij = c(haversine(i, j)).

    Use GaussianFieldSimulator directly when drawing many samples on one grid:
    it factorizes the covariance only once.
    """
    return GaussianFieldSimulator(grid, spec).sample(seed, stream_id)
