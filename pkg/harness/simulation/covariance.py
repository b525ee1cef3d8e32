"""
Covariance Model Module

This module defines the abstract base class for isotropic correlation models
and the concrete families the harness supports. A model turns a matrix of
great-circle distances into a unit-variance covariance matrix.
"""
from abc import ABC, abstractmethod

import numpy as np

from harness.model import CovarianceFamily, CovarianceSpec
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)


class CovarianceModel(ABC):
    """
    Abstract base class for stationary isotropic covariance models.

    Concrete implementations provide the correlation function rho(h) of the
    scaled distance h = d / range_km; the base class adds the nugget.
    """

    def __init__(self, spec: CovarianceSpec):
        self.spec = spec

    @abstractmethod
    def correlation(self, scaled_distance: np.ndarray) -> np.ndarray:
        """
        Correlation at scaled distance ``d / range_km``.

        Args:
            scaled_distance: nonnegative array of scaled distances

        Returns:
            Array of correlations with rho(0) = 1
        """
        pass

    def covariance(self, distance_km: np.ndarray) -> np.ndarray:
        """
        Covariance at the given distances: 1 at distance 0, (1 - nugget) * rho otherwise.
        """
        distance_km = np.asarray(distance_km, dtype=np.float64)
        cov = (1.0 - self.spec.nugget) * self.correlation(distance_km / self.spec.range_km)
        return np.where(distance_km == 0.0, 1.0, cov)


class ExponentialCovariance(CovarianceModel):
    """rho(h) = exp(-h)."""

    def correlation(self, scaled_distance):
        return np.exp(-scaled_distance)


class GaussianCovariance(CovarianceModel):
    """rho(h) = exp(-h^2); very smooth fields, often numerically semi-definite."""

    def correlation(self, scaled_distance):
        return np.exp(-np.square(scaled_distance))


def get_covariance_model(spec: CovarianceSpec) -> CovarianceModel:
    """
    Factory function to create the covariance model for a spec.

    Raises:
        ValueError: If the family is unknown
    """
    logger.debug(f"Creating covariance model: family={spec.family.value}, range={spec.range_km} km, nugget={spec.nugget}")
    if spec.family == CovarianceFamily.EXPONENTIAL:
        return ExponentialCovariance(spec)
    elif spec.family == CovarianceFamily.GAUSSIAN:
        return GaussianCovariance(spec)
    else:
        logger.error(f"Unknown covariance family: {spec.family}")
        raise ValueError(f"Unknown covariance family: {spec.family}")
