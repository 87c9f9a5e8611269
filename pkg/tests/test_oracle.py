import numpy as np
import pytest

from dualwarm.oracle import (
    OracleBudget,
    OracleBudgetError,
    brute_cover_opt,
    brute_mwbm,
    brute_mwpm,
)


class TestBruteMWPM:
    def test_single_vertex(self):
        assert brute_mwpm([[7]]) == (7, [(0, 0)])

    def test_two_by_two(self):
        assert brute_mwpm([[1, 2], [2, 1]])[0] == 2

    def test_budget(self):
        with pytest.raises(OracleBudgetError):
            brute_mwpm(np.zeros((9, 9), int))
        with pytest.raises(OracleBudgetError):
            brute_mwpm(np.zeros((3, 3), int), OracleBudget(max_n=2))


class TestBruteCover:
    def test_empty(self):
        assert brute_cover_opt(3, []) == 0

    def test_single_edge(self):
        assert brute_cover_opt(2, [(0, 1, 3)]) == 3

    def test_path(self):
        assert brute_cover_opt(3, [(0, 1, 4), (1, 2, 2)]) == 4

    def test_weighted(self):
        # Covering through the cheap vertex 1 costs 4*1; through 0 and 2 costs 4*5 + 2*5.
        assert brute_cover_opt(3, [(0, 1, 4), (1, 2, 2)], weights=[5, 1, 5]) == 4

    def test_budget(self):
        with pytest.raises(OracleBudgetError):
            brute_cover_opt(2, [(0, 1, 11)])
        with pytest.raises(OracleBudgetError):
            brute_cover_opt(8, [(k, k + 1, 1) for k in range(7)])


class TestBruteMWBM:
    def test_unit_demands_match_permutation_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            c = rng.integers(0, 9, size=(n, n))
            assert brute_mwbm(c, [1] * n, [1] * n)[0] == brute_mwpm(c)[0]

    def test_doubled_diagonal(self):
        cost, x = brute_mwbm([[1, 5], [5, 1]], [2, 2], [2, 2])
        assert cost == 4
        assert x.tolist() == [[2, 0], [0, 2]]

    def test_unbalanced_is_infeasible(self):
        assert brute_mwbm([[1, 1], [1, 1]], [2, 1], [1, 1]) is None

    def test_missing_edges_can_make_it_infeasible(self):
        present = np.array([[True, False], [True, False]])
        assert brute_mwbm([[1, 1], [1, 1]], [1, 1], [1, 1], present) is None

    def test_budget(self):
        with pytest.raises(OracleBudgetError):
            brute_mwbm(np.zeros((2, 2), int), [6, 6], [6, 6])
