import numpy as np
import pytest
import scipy.sparse

from amc_codes.clusters import LogicalSearch, column_supports, connected_subsets, min_logical_weight, neighbours
from amc_codes.gf2 import BitMatrix


@pytest.fixture
def repetition_checks():
    """Checks of a closed 5-bit repetition code: column q touches checks q-1 and q."""
    return [tuple(sorted({(q - 1) % 5, q})) for q in range(5)]


def test_column_supports_accepts_dense_bitmatrix_and_sparse():
    dense = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    expected = [(0,), (1,), (0, 1)]
    assert column_supports(dense) == expected
    assert column_supports(BitMatrix.from_dense(dense)) == expected
    assert column_supports(scipy.sparse.csc_matrix(dense)) == expected


def test_neighbours_share_a_check(repetition_checks):
    adjacency = neighbours(repetition_checks)
    assert adjacency[0] == (1, 4)
    assert adjacency[2] == (1, 3)


def test_connected_subsets_of_a_cycle(repetition_checks):
    adjacency = neighbours(repetition_checks)
    assert sorted(connected_subsets(adjacency, 1)) == [(q,) for q in range(5)]
    pairs = sorted(connected_subsets(adjacency, 2))
    assert pairs == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]
    assert len(list(connected_subsets(adjacency, 3))) == 5


def test_connected_subsets_unordered_yields_once_per_root(repetition_checks):
    adjacency = neighbours(repetition_checks)
    from_zero = list(connected_subsets(adjacency, 2, roots=[0], ordered=False))
    assert sorted(from_zero) == [(0, 1), (0, 4)]


def test_logical_search_finds_the_whole_cycle(repetition_checks):
    logicals = [(0,)] + [()] * 4
    search = LogicalSearch(repetition_checks, logicals)
    assert search.search(0, 4) is None
    assert search.search(0, 5) == (0, 1, 2, 3, 4)


def test_min_logical_weight_with_undetected_column():
    col_checks = [(0,), (0,), ()]
    col_logicals = [(), (0,), (0,)]
    assert min_logical_weight(col_checks, col_logicals, 3, threads=1) == (1, (2,))


def test_min_logical_weight_pairs_columns():
    col_checks = [(0,), (0,), (1,)]
    col_logicals = [(), (0,), ()]
    assert min_logical_weight(col_checks, col_logicals, 3, threads=1) == (2, (0, 1))


def test_min_logical_weight_returns_none_above_cap(repetition_checks):
    logicals = [(0,)] + [()] * 4
    assert min_logical_weight(repetition_checks, logicals, 4, threads=1) is None
    assert min_logical_weight(repetition_checks, logicals, 5, threads=1) == (5, (0, 1, 2, 3, 4))
