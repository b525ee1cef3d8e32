import pytest

from harness.utils.parallel import chunk_bounds, map_chunks


@pytest.mark.parametrize("n_items, n_chunks", [(10, 3), (3, 10), (0, 4), (7, 1), (100, 16)])
def test_chunks_cover_the_range_in_order(n_items, n_chunks):
    bounds = chunk_bounds(n_items, n_chunks)
    assert bounds[0][0] == 0
    assert bounds[-1][1] == n_items
    assert all(stop == start for (_, stop), (start, _) in zip(bounds, bounds[1:]))
    assert len(bounds) <= max(1, n_chunks)


def test_chunk_sizes_differ_by_at_most_one():
    sizes = [stop - start for start, stop in chunk_bounds(10, 3)]
    assert sizes == [4, 3, 3]


@pytest.mark.parametrize("threads", [1, 2, 5])
def test_results_come_back_in_chunk_order(threads):
    results = map_chunks(lambda start, stop: list(range(start, stop)), 50, threads)
    assert [item for chunk in results for item in chunk] == list(range(50))
