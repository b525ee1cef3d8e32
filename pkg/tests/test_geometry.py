import numpy as np
import pytest

from harness.exceptions import AlignmentError, DataError
from harness.geometry.grid import KM_PER_DEGREE, Grid, haversine_km, haversine_km_array, read_grid, regular_grid, write_grid
from harness.geometry.neighbors import build_neighbor_table
from harness.model import GeoPoint


def brute_force_neighbors(grid, radius_km):
    lon1, lon2 = np.meshgrid(grid.lon, grid.lon, indexing="ij")
    lat1, lat2 = np.meshgrid(grid.lat, grid.lat, indexing="ij")
    distance = haversine_km_array(lon1, lat1, lon2, lat2)
    return [np.flatnonzero(row <= radius_km) for row in distance]


class TestHaversine:
    def test_coincident_points(self):
        p = GeoPoint(lon=38.2, lat=21.7)
        assert haversine_km(p, p) == 0.0

    def test_one_degree_of_latitude(self):
        d = haversine_km(GeoPoint(lon=0.0, lat=0.0), GeoPoint(lon=0.0, lat=1.0))
        assert d == pytest.approx(111.1949, abs=1e-3)
        assert d == pytest.approx(KM_PER_DEGREE, rel=1e-12)

    def test_twentieth_of_a_degree_on_the_equator(self):
        d = haversine_km(GeoPoint(lon=0.0, lat=0.0), GeoPoint(lon=0.05, lat=0.0))
        assert d == pytest.approx(5.56, abs=0.01)

    def test_symmetric(self, rng):
        lon = rng.uniform(32, 44, size=(2, 50))
        lat = rng.uniform(12, 30, size=(2, 50))
        forward = haversine_km_array(lon[0], lat[0], lon[1], lat[1])
        backward = haversine_km_array(lon[1], lat[1], lon[0], lat[0])
        assert np.array_equal(forward, backward)
        assert (forward >= 0).all()


class TestGrid:
    def test_regular_grid_ids(self):
        grid = regular_grid(3, 4, 38.0, 20.0, 0.05)
        assert grid.n_cells == 12
        # cell_id = row * cols + col
        assert grid.cell(5).lon == pytest.approx(38.05)
        assert grid.cell(5).lat == pytest.approx(20.05)

    def test_rejects_duplicate_cells(self):
        with pytest.raises(ValueError):
            Grid(lon=np.array([38.0, 38.0]), lat=np.array([20.0, 20.0]))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Grid(lon=np.array([190.0]), lat=np.array([20.0]))

    def test_csv_round_trip(self, tmp_path, small_grid):
        path = tmp_path / "grid.csv"
        write_grid(small_grid, path)
        assert path.read_bytes().startswith(b"cell_id,lon_deg,lat_deg\n")
        assert b"\r\n" not in path.read_bytes()
        loaded = read_grid(path)
        assert np.array_equal(loaded.lon, small_grid.lon)
        assert np.array_equal(loaded.lat, small_grid.lat)
        assert loaded.fingerprint() == small_grid.fingerprint()

    def test_read_rejects_gapped_ids(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("cell_id,lon_deg,lat_deg\n0,38.0,20.0\n2,38.1,20.0\n")
        with pytest.raises(DataError):
            read_grid(path)

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_grid(tmp_path / "absent.csv")


class TestNeighborTable:
    def test_radius_zero_is_self_only(self, small_grid):
        table = build_neighbor_table(small_grid, 0.0)
        for cell_id in range(small_grid.n_cells):
            assert table.offsets(cell_id).tolist() == [cell_id]

    def test_matches_brute_force_at_50km(self, small_grid):
        table = build_neighbor_table(small_grid, 50.0)
        for cell_id, expected in enumerate(brute_force_neighbors(small_grid, 50.0)):
            assert np.array_equal(table.offsets(cell_id), expected)

    @pytest.mark.parametrize("radius_km", [5.0, 5.56, 12.0, 20.0])
    def test_matches_brute_force_at_boundary_radii(self, small_grid, radius_km):
        table = build_neighbor_table(small_grid, radius_km)
        for cell_id, expected in enumerate(brute_force_neighbors(small_grid, radius_km)):
            assert np.array_equal(table.offsets(cell_id), expected)

    def test_symmetric_and_sorted(self, small_grid):
        table = build_neighbor_table(small_grid, 12.0)
        members = {(i, int(j)) for i in range(small_grid.n_cells) for j in table.offsets(i)}
        assert all((j, i) in members for i, j in members)
        for i in range(small_grid.n_cells):
            assert (np.diff(table.offsets(i)) > 0).all()

    def test_monotone_in_radius(self, small_grid):
        small = build_neighbor_table(small_grid, 8.0)
        large = build_neighbor_table(small_grid, 16.0)
        for i in range(small_grid.n_cells):
            assert set(small.offsets(i)) <= set(large.offsets(i))

    def test_open_ocean_disk_size(self):
        grid = regular_grid(41, 41, 38.0, 20.0, 0.05)
        table = build_neighbor_table(grid, 50.0)
        center = 20 * 41 + 20
        # pi * (50 / 5.5)^2 is roughly 260
        assert 230 <= table.sizes()[center] <= 300

    def test_thread_count_does_not_change_table(self, small_grid):
        one = build_neighbor_table(small_grid, 20.0, threads=1)
        four = build_neighbor_table(small_grid, 20.0, threads=4)
        assert np.array_equal(one.indptr, four.indptr)
        assert np.array_equal(one.indices, four.indices)

    def test_rejects_negative_radius(self, small_grid):
        with pytest.raises(ValueError):
            build_neighbor_table(small_grid, -1.0)

    def test_grid_check(self, small_grid, tiny_grid):
        table = build_neighbor_table(small_grid, 10.0)
        table.check_grid(small_grid)
        with pytest.raises(AlignmentError):
            table.check_grid(tiny_grid)
