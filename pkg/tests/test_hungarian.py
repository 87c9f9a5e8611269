import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualwarm.feasibility import project_duals
from dualwarm.graph import (
    BipartiteInstance,
    DualVector,
    InfeasibleDualError,
    InfeasibleInstanceError,
    edge_slacks,
    is_dual_feasible,
    tight_subgraph,
)
from dualwarm.hungarian import (
    cold_start_dual,
    dual_update,
    hall_violator,
    max_cardinality_matching,
    solve_mwpm,
    tighten,
)
from dualwarm.oracle import brute_mwpm
from helpers import random_feasible_dual, random_instance

EXAMPLE_3X3 = [(0, 0), (1, 0), (1, 1), (2, 1)]


def _max_matching_size_brute(edges, n_left):
    best = 0
    for k in range(1, n_left + 1):
        for combo in itertools.combinations(edges, k):
            if len({i for i, _ in combo}) == k and len({j for _, j in combo}) == k:
                best = k
    return best


class TestMaxCardinalityMatching:
    def test_empty(self):
        assert max_cardinality_matching([], 3) == []

    def test_identity(self):
        assert max_cardinality_matching([(i, i) for i in range(4)], 4) == [
            (i, i) for i in range(4)
        ]

    def test_example_size_two(self):
        m = max_cardinality_matching(EXAMPLE_3X3, 3, 3)
        assert len(m) == 2 == _max_matching_size_brute(EXAMPLE_3X3, 3)

    def test_warm_start_only_augments(self):
        edges = [(0, 0), (0, 1), (1, 0)]
        m = max_cardinality_matching(edges, 2, 2, initial=[(0, 0)])
        assert sorted(m) == [(0, 1), (1, 0)]

    def test_rejects_invalid_initial(self):
        with pytest.raises(ValueError):
            max_cardinality_matching([(0, 0)], 1, 1, initial=[(0, 1)])

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.data())
    def test_size_matches_enumeration(self, nl, nr, data):
        pairs = [(i, j) for i in range(nl) for j in range(nr)]
        edges = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=8))
        m = max_cardinality_matching(edges, nl, nr)
        assert len({i for i, _ in m}) == len({j for _, j in m}) == len(m)
        assert set(m) <= set(edges)
        assert len(m) == _max_matching_size_brute(edges, nl)


class TestHallViolator:
    def test_isolated_left_vertex(self):
        v = hall_violator([(0, 0)], [(0, 0)], 2, 2)
        assert 1 in v.S and v.neighbours == ()

    def test_shared_neighbour(self):
        v = hall_violator([(0, 0), (1, 0)], [(0, 0)], 2, 2)
        assert v.S == (0, 1) and v.neighbours == (0,)

    def test_three_by_three_example(self):
        m = max_cardinality_matching(EXAMPLE_3X3, 3, 3)
        v = hall_violator(EXAMPLE_3X3, m, 3, 3)
        assert len(v.S) > len(v.neighbours)
        assert v.S == (0, 1, 2) and v.neighbours == (0, 1)
        # Exhaustive search: no smaller subset violates Hall's condition here.
        nbr = {i: {j for a, j in EXAMPLE_3X3 if a == i} for i in range(3)}
        violators = [
            S for k in range(1, 4) for S in itertools.combinations(range(3), k)
            if len(S) > len(set().union(*(nbr[i] for i in S)))
        ]
        assert violators == [(0, 1, 2)]

    def test_perfect_matching_has_no_violator(self):
        with pytest.raises(ValueError):
            hall_violator([(0, 0)], [(0, 0)], 1, 1)

    def test_non_maximum_matching_rejected(self):
        with pytest.raises(ValueError):
            hall_violator([(0, 0), (1, 1)], [(0, 0)], 2, 2)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 6), st.data())
    def test_violator_is_valid(self, n, data):
        pairs = [(i, j) for i in range(n) for j in range(n)]
        edges = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=12))
        m = max_cardinality_matching(edges, n, n)
        if len(m) == n:
            return
        v = hall_violator(edges, m, n, n)
        gamma = {j for i, j in edges if i in v.S}
        assert gamma == set(v.neighbours)
        assert len(v.S) - len(gamma) == n - len(m)  # deficiency equals the König gap


class TestDualUpdate:
    def test_single_slack(self):
        inst = BipartiteInstance.from_matrix([[2]])
        y, eps = dual_update(inst, DualVector.zeros(1, 1), [0])
        assert eps == 2 and y == DualVector([2], [0])

    def test_equal_slacks_all_become_tight(self):
        inst = BipartiteInstance.from_matrix([[0, 3, 3], [5, 3, 3], [5, 3, 3]])
        y0 = DualVector.zeros(3, 3)
        y, eps = dual_update(inst, y0, [0])
        assert eps == 3
        assert set(tight_subgraph(inst, y)) >= {(0, 1), (0, 2)}

    def test_no_crossing_edge_is_infeasible(self):
        inst = BipartiteInstance.from_edges(2, 2, [(0, 0, 1), (1, 0, 1), (1, 1, 1)])
        with pytest.raises(InfeasibleInstanceError) as info:
            dual_update(inst, DualVector([1, 1], [0, 0]), [0])
        assert info.value.violator == (0,)

    def test_feasibility_preserved_random(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            inst = random_instance(rng, 5, hi=9)
            y = random_feasible_dual(rng, inst, 3)
            tight = tight_subgraph(inst, y)
            m = max_cardinality_matching(tight, 5, 5)
            if len(m) == 5:
                continue
            v = hall_violator(tight, m, 5, 5)
            y2, eps = dual_update(inst, y, v.S)
            assert eps >= 1
            assert is_dual_feasible(inst, y2)
            assert set(m) <= set(tight_subgraph(inst, y2))
            assert y2.objective() - y.objective() == eps * (len(v.S) - len(v.neighbours))


class TestTighten:
    def test_already_tight_unchanged(self):
        inst = BipartiteInstance.from_matrix([[1, 2], [3, 4]])
        y = DualVector([1, 3], [0, 0])
        assert tighten(inst, y) == y

    def test_zero_dual_gives_row_minima(self):
        c = np.array([[4, 2, 9], [7, 7, 1], [3, 8, 5]])
        assert tighten(BipartiteInstance.from_matrix(c), DualVector.zeros(3, 3)).y_left.tolist() == [2, 1, 3]

    def test_infeasible_rejected(self):
        with pytest.raises(InfeasibleDualError):
            tighten(BipartiteInstance.from_matrix([[1]]), DualVector([2], [0]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31))
    def test_idempotent_and_feasible(self, n, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, n)
        y = tighten(inst, random_feasible_dual(rng, inst))
        assert is_dual_feasible(inst, y)
        assert tighten(inst, y) == y
        assert {i for i, _ in tight_subgraph(inst, y)} == set(range(n))


class TestColdStart:
    def test_zero_and_feasible(self):
        inst = BipartiteInstance.from_matrix([[1, 2], [3, 4]])
        y = cold_start_dual(inst)
        assert y == DualVector.zeros(2, 2)
        assert y.objective() == 0
        assert is_dual_feasible(inst, y)


class TestSolveMWPM:
    def test_two_by_two(self):
        res = solve_mwpm(BipartiteInstance.from_matrix([[1, 2], [2, 1]]))
        assert list(res.matching.pairs) == [(0, 0), (1, 1)]
        assert res.matching.cost == 2

    def test_optimal_seed_needs_no_iterations(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, 7)
        y_star = solve_mwpm(inst).dual
        res = solve_mwpm(inst, y_star)
        assert res.stats.iterations == 0
        assert res.stats.final_dual_objective == res.stats.initial_dual_objective

    def test_empty_instance(self):
        res = solve_mwpm(BipartiteInstance.from_edges(0, 0, []))
        assert len(res.matching.pairs) == 0 and res.matching.cost == 0

    def test_infeasible_dual_points_to_projection(self):
        inst = BipartiteInstance.from_matrix([[1]])
        with pytest.raises(InfeasibleDualError, match="project_duals"):
            solve_mwpm(inst, DualVector([5], [0]))

    def test_no_perfect_matching(self):
        inst = BipartiteInstance.from_edges(2, 2, [(0, 0, 1), (1, 0, 1), (1, 1, 1)])
        inst_bad = BipartiteInstance.from_edges(2, 2, [(0, 0, 1), (1, 0, 1), (0, 1, 2)])
        assert solve_mwpm(inst).matching.cost == 2
        with pytest.raises(InfeasibleInstanceError):
            solve_mwpm(BipartiteInstance.from_edges(2, 2, [(0, 0, 1), (1, 0, 1)]))
        assert solve_mwpm(inst_bad).matching.cost == 3

    def test_hall_deficient_sparse_instance(self):
        inst = BipartiteInstance.from_edges(
            3, 3, [(0, 0, 1), (1, 0, 1), (2, 0, 1), (2, 1, 1), (2, 2, 1)]
        )
        with pytest.raises(InfeasibleInstanceError):
            solve_mwpm(inst)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            solve_mwpm(BipartiteInstance.from_matrix([[1, 2]]))

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 2**31), st.booleans())
    def test_matches_oracle_with_certificate(self, n, seed, use_tighten):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, n)
        y0 = random_feasible_dual(rng, inst)
        res = solve_mwpm(inst, y0, use_tighten=use_tighten, check_invariants=True)
        assert res.matching.cost == brute_mwpm(inst)[0]
        assert len(res.matching) == n
        # Complementary slackness and strong duality certify optimality.
        assert is_dual_feasible(inst, res.dual)
        s = edge_slacks(inst, res.dual).reshape(n, n)
        assert all(s[i, j] == 0 for i, j in res.matching.pairs)
        assert res.dual.objective() == res.matching.cost
        st_ = res.stats
        assert st_.final_dual_objective == res.dual.objective()
        assert st_.iterations <= st_.final_dual_objective - st_.initial_dual_objective

    def test_iterations_bounded_by_distance_to_optimal_dual(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            inst = random_instance(rng, 6)
            y_star = solve_mwpm(inst).dual
            y0 = random_feasible_dual(rng, inst)
            res = solve_mwpm(inst, y0)
            assert res.stats.iterations <= y0.l1_distance(y_star)

    def test_projected_prediction_warm_start(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            inst = random_instance(rng, 6)
            y_hat = DualVector(rng.integers(0, 20, 6), rng.integers(-5, 10, 6))
            res = solve_mwpm(inst, project_duals(inst, y_hat))
            assert res.matching.cost == brute_mwpm(inst)[0]

    def test_stats_dict(self):
        res = solve_mwpm(BipartiteInstance.from_matrix([[1, 2], [2, 1]]))
        d = res.stats.as_dict()
        assert set(d) == {
            "iterations", "augmentations", "wall_time",
            "initial_dual_objective", "final_dual_objective",
        }
        assert d["augmentations"] == 2
