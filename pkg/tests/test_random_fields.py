import numpy as np
import pytest

from harness.exceptions import CapExceededError, FactorizationError
from harness.geometry.grid import Grid, haversine_km_array, regular_grid
from harness.model import CovarianceFamily, CovarianceSpec
from harness.simulation.covariance import get_covariance_model
from harness.simulation.random_fields import (
    MAX_DENSE_CELLS, GaussianFieldSimulator, cholesky_with_jitter, simulate_grf, standard_normals,
)


class TestCovarianceModels:
    def test_exponential_at_one_range(self):
        model = get_covariance_model(CovarianceSpec(range_km=50.0))
        assert model.covariance(np.array([0.0, 50.0]))[1] == pytest.approx(np.exp(-1.0))
        assert model.covariance(np.array([0.0]))[0] == 1.0

    def test_gaussian_at_two_ranges(self):
        model = get_covariance_model(CovarianceSpec(family=CovarianceFamily.GAUSSIAN, range_km=10.0))
        assert model.covariance(np.array([20.0]))[0] == pytest.approx(np.exp(-4.0))

    def test_nugget_scales_off_diagonal_only(self):
        model = get_covariance_model(CovarianceSpec(range_km=50.0, nugget=0.25))
        cov = model.covariance(np.array([0.0, 50.0]))
        assert cov[0] == 1.0
        assert cov[1] == pytest.approx(0.75 * np.exp(-1.0))


class TestStreams:
    def test_standard_normals_are_reproducible(self):
        assert np.array_equal(standard_normals(1, 5, 100), standard_normals(1, 5, 100))

    def test_streams_and_seeds_differ(self):
        base = standard_normals(1, 5, 100)
        assert not np.array_equal(base, standard_normals(1, 6, 100))
        assert not np.array_equal(base, standard_normals(2, 5, 100))

    def test_prefix_property(self):
        assert np.array_equal(standard_normals(3, 0, 10), standard_normals(3, 0, 50)[:10])


class TestSimulator:
    def test_same_key_same_sample(self, tiny_grid):
        simulator = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=20.0))
        first = simulator.sample(42, 7)
        second = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=20.0)).sample(42, 7)
        assert np.array_equal(first.values, second.values)
        assert first.values.shape == (tiny_grid.n_cells,)
        assert not np.array_equal(first.values, simulator.sample(42, 8).values)

    def test_sample_does_not_depend_on_batch(self, tiny_grid):
        simulator = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=20.0))
        matrix = simulator.sample_matrix(9, range(300))
        assert np.array_equal(matrix[257], simulator.sample(9, 257).values)

    def test_thread_count_does_not_change_samples(self, tiny_grid):
        simulator = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=20.0))
        one = simulator.sample_matrix(11, range(600), threads=1)
        four = simulator.sample_matrix(11, range(600), threads=4)
        assert np.array_equal(one, four)

    def test_pure_nugget_gives_the_stream_normals(self, tiny_grid):
        sample = simulate_grf(tiny_grid, CovarianceSpec(nugget=1.0), seed=5, stream_id=3)
        assert np.allclose(sample.values, standard_normals(5, 3, tiny_grid.n_cells), atol=0, rtol=1e-15)
        assert sample.seed == 5 and sample.stream_id == 3

    def test_cap(self):
        grid = regular_grid(150, 150, 30.0, 10.0, 0.01)
        assert grid.n_cells > MAX_DENSE_CELLS
        with pytest.raises(CapExceededError):
            GaussianFieldSimulator(grid, CovarianceSpec())


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky_with_jitter(np.eye(3)), np.eye(3))

    def test_factor_reproduces_matrix(self, small_grid):
        simulator = GaussianFieldSimulator(small_grid, CovarianceSpec(range_km=30.0))
        factor = simulator.factor
        assert np.allclose(np.triu(factor, 1), 0.0)
        assert np.allclose(np.diag(factor @ factor.T), 1.0)

    def test_indefinite_matrix_fails(self):
        with pytest.raises(FactorizationError) as excinfo:
            cholesky_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert excinfo.value.leading_minor == 2


@pytest.mark.slow
class TestMonteCarlo:
    def test_correlation_at_one_range(self):
        grid = regular_grid(1, 2, 38.0, 20.0, 0.05)
        distance = float(haversine_km_array(grid.lon[0], grid.lat[0], grid.lon[1], grid.lat[1]))
        simulator = GaussianFieldSimulator(grid, CovarianceSpec(range_km=distance))
        samples = simulator.sample_matrix(2019, range(20_000))
        assert np.corrcoef(samples.T)[0, 1] == pytest.approx(np.exp(-1.0), abs=0.03)

    def test_unit_variance_and_zero_mean(self, tiny_grid):
        simulator = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=15.0))
        samples = simulator.sample_matrix(1, range(20_000))
        assert np.abs(samples.mean(axis=0)).max() < 0.05
        assert np.abs(samples.var(axis=0) - 1.0).max() < 0.05

    def test_equidistant_pairs_correlate_alike_in_any_direction(self):
        # a north-south pair and an east-west pair at the same great-circle distance
        d_lat = 0.05
        distance = float(haversine_km_array(38.0, 20.0, 38.0, 20.0 + d_lat))
        d_lon = np.degrees(2.0 * np.arcsin(np.sin(np.radians(d_lat) / 2.0) / np.cos(np.radians(20.0))))
        grid = Grid(lon=np.array([38.0, 38.0, 38.5, 38.5 + d_lon]), lat=np.array([20.0, 20.0 + d_lat, 20.0, 20.0]))
        assert float(haversine_km_array(grid.lon[2], grid.lat[2], grid.lon[3], grid.lat[3])) == pytest.approx(
            distance, rel=1e-9)

        simulator = GaussianFieldSimulator(grid, CovarianceSpec(range_km=distance))
        corr = np.corrcoef(simulator.sample_matrix(77, range(20_000)).T)
        assert corr[0, 1] == pytest.approx(np.exp(-1.0), abs=0.03)
        assert corr[2, 3] == pytest.approx(corr[0, 1], abs=0.03)

    @pytest.mark.parametrize("offset", [1, 10_000])
    def test_distinct_streams_are_uncorrelated(self, tiny_grid, offset):
        n = 20_000
        simulator = GaussianFieldSimulator(tiny_grid, CovarianceSpec(range_km=15.0))
        first = simulator.sample_matrix(5, range(n))
        second = simulator.sample_matrix(5, range(offset, offset + n))
        assert abs(np.corrcoef(first[:, 0], second[:, 0])[0, 1]) < 3.0 / np.sqrt(n)
