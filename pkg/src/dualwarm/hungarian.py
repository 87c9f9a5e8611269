"""Dual-seedable primal-dual solver for minimum-weight perfect matching.

The solver keeps a feasible integer dual ``y`` and a maximum-cardinality
matching ``M`` on the tight edges. While ``M`` is not perfect it takes the
Hall violator ``S = L \\ C`` from a König cover ``C``, raises ``y`` on ``S``
and lowers it on ``S``'s tight neighbourhood by the smallest slack leaving
that neighbourhood. Matched edges stay tight, so ``M`` is kept and only
augmented. With a zero seed this is the Hungarian method.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from dualwarm.graph import (
    MISSING,
    BipartiteInstance,
    DualVector,
    InfeasibleDualError,
    InfeasibleInstanceError,
    Matching,
    edge_slacks,
)


@dataclass
class SolveStats:
    iterations: int = 0
    augmentations: int = 0
    wall_time: float = 0.0
    initial_dual_objective: int = 0
    final_dual_objective: int = 0

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "augmentations": self.augmentations,
            "wall_time": self.wall_time,
            "initial_dual_objective": self.initial_dual_objective,
            "final_dual_objective": self.final_dual_objective,
        }


@dataclass(frozen=True)
class HallViolator:
    """Left set ``S`` and its neighbourhood, with ``|S| > |neighbours|``."""

    S: tuple[int, ...]
    neighbours: tuple[int, ...]


class SolveResult(NamedTuple):
    matching: Matching
    dual: DualVector
    stats: SolveStats


def _adjacency(edges: Iterable[tuple[int, int]], n_left: int) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n_left)]
    for i, j in edges:
        adj[i].append(j)
    for row in adj:
        row.sort()
    return adj


def _hopcroft_karp(adj: Sequence[Sequence[int]], mate_l: list[int], mate_r: list[int]) -> int:
    """Grow ``mate_l``/``mate_r`` in place to a maximum matching.

    Returns the number of augmenting paths applied.
    """
    n_left = len(adj)
    augmented = 0
    while True:
        # BFS layers from free left vertices; dist is only defined on the left.
        dist = [-1] * n_left
        queue = deque()
        for i in range(n_left):
            if mate_l[i] < 0:
                dist[i] = 0
                queue.append(i)
        limit = -1
        while queue:
            i = queue.popleft()
            if limit >= 0 and dist[i] >= limit:
                continue
            for j in adj[i]:
                k = mate_r[j]
                if k < 0:
                    if limit < 0:
                        limit = dist[i] + 1
                elif dist[k] < 0:
                    dist[k] = dist[i] + 1
                    queue.append(k)
        if limit < 0:
            return augmented

        # Vertex-disjoint shortest augmenting paths by iterative DFS.
        ptr = [0] * n_left
        for root in range(n_left):
            if mate_l[root] >= 0 or dist[root] != 0:
                continue
            stack = [root]
            path: list[int] = []
            while stack:
                i = stack[-1]
                row = adj[i]
                found = False
                while ptr[i] < len(row):
                    j = row[ptr[i]]
                    ptr[i] += 1
                    k = mate_r[j]
                    if k < 0:
                        if dist[i] + 1 == limit:
                            path.append(j)
                            found = True
                            break
                    elif dist[k] == dist[i] + 1:
                        path.append(j)
                        stack.append(k)
                        break
                else:
                    dist[i] = -1
                    stack.pop()
                    if path:
                        path.pop()
                    continue
                if found:
                    for lv, rv in zip(stack, path):
                        mate_l[lv] = rv
                        mate_r[rv] = lv
                    augmented += 1
                    break


def _alternating_reach(
    adj: Sequence[Sequence[int]], mate_l: Sequence[int], mate_r: Sequence[int]
) -> tuple[list[bool], list[bool]]:
    """Vertices reachable by alternating paths from free left vertices."""
    n_left = len(adj)
    seen_l = [mate_l[i] < 0 for i in range(n_left)]
    seen_r = [False] * len(mate_r)
    queue = deque(i for i in range(n_left) if seen_l[i])
    while queue:
        i = queue.popleft()
        for j in adj[i]:
            if seen_r[j]:
                continue
            seen_r[j] = True
            k = mate_r[j]
            if k >= 0 and not seen_l[k]:
                seen_l[k] = True
                queue.append(k)
    return seen_l, seen_r


def max_cardinality_matching(
    edges: Iterable[tuple[int, int]],
    n_left: int,
    n_right: int | None = None,
    initial: Iterable[tuple[int, int]] = (),
) -> list[tuple[int, int]]:
    """Maximum-cardinality matching on an unweighted bipartite edge set.

    ``initial`` must be a valid matching inside ``edges``; it is only ever
    augmented, never discarded.
    """
    edges = list(edges)
    if n_right is None:
        n_right = max((j for _, j in edges), default=-1) + 1
        n_right = max(n_right, n_left)
    edge_set = set(edges)
    mate_l = [-1] * n_left
    mate_r = [-1] * n_right
    for i, j in initial:
        if (i, j) not in edge_set:
            raise ValueError(f"initial pair ({i}, {j}) is not an edge")
        if mate_l[i] >= 0 or mate_r[j] >= 0:
            raise ValueError("initial pairs are not vertex-disjoint")
        mate_l[i], mate_r[j] = j, i
    _hopcroft_karp(_adjacency(edges, n_left), mate_l, mate_r)
    return [(i, j) for i, j in enumerate(mate_l) if j >= 0]


def hall_violator(
    edges: Iterable[tuple[int, int]],
    matching: Iterable[tuple[int, int]],
    n_left: int,
    n_right: int,
) -> HallViolator:
    """``S = L \\ C`` for the König cover ``C`` built from a maximum matching.

    ``C`` consists of the unreached left vertices and the reached right
    vertices of the alternating search from free left vertices, so ``S`` is
    the reached left side and its neighbourhood is the reached right side.
    """
    edges = list(edges)
    mate_l = [-1] * n_left
    mate_r = [-1] * n_right
    for i, j in matching:
        mate_l[i], mate_r[j] = j, i
    if all(m >= 0 for m in mate_l):
        raise ValueError("matching saturates the left side; no Hall violator exists")
    adj = _adjacency(edges, n_left)
    seen_l, seen_r = _alternating_reach(adj, mate_l, mate_r)
    if any(seen_r[j] and mate_r[j] < 0 for j in range(n_right)):
        raise ValueError("matching is not maximum (augmenting path exists)")
    return HallViolator(
        tuple(i for i in range(n_left) if seen_l[i]),
        tuple(j for j in range(n_right) if seen_r[j]),
    )


def _neighbourhood(inst: BipartiteInstance, y: DualVector, S: Iterable[int]) -> np.ndarray:
    s_mask = np.zeros(inst.n_left, bool)
    s_mask[list(S)] = True
    tight = (edge_slacks(inst, y) == 0) & s_mask[inst.left]
    g_mask = np.zeros(inst.n_right, bool)
    g_mask[inst.right[tight]] = True
    return g_mask


def dual_update(
    inst: BipartiteInstance, y: DualVector, S: Iterable[int]
) -> tuple[DualVector, int]:
    """Raise ``y`` on ``S`` and lower it on ``S``'s tight neighbourhood.

    The step is the least slack over edges from ``S`` to right vertices
    outside the neighbourhood. Raises :class:`InfeasibleInstanceError` when
    no such edge exists.
    """
    S = sorted(set(S))
    slacks = edge_slacks(inst, y)
    if slacks.size and slacks.min() < 0:
        raise InfeasibleDualError("dual_update needs a feasible dual")
    g_mask = _neighbourhood(inst, y, S)
    s_mask = np.zeros(inst.n_left, bool)
    s_mask[S] = True
    crossing = s_mask[inst.left] & ~g_mask[inst.right]
    if not crossing.any():
        raise InfeasibleInstanceError("no edge leaves the Hall violator", S)
    eps = int(slacks[crossing].min())
    y_left = y.y_left.copy()
    y_right = y.y_right.copy()
    y_left[s_mask] += eps
    y_right[g_mask] -= eps
    return DualVector(y_left, y_right), eps


def tighten(inst: BipartiteInstance, y: DualVector) -> DualVector:
    """Raise each left price by its smallest incident slack."""
    s = edge_slacks(inst, y)
    if s.size and s.min() < 0:
        raise InfeasibleDualError("tighten needs a feasible dual")
    row_min = np.full(inst.n_left, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(row_min, inst.left, s)
    row_min[row_min == np.iinfo(np.int64).max] = 0
    return DualVector(y.y_left + row_min, y.y_right)


def cold_start_dual(inst: BipartiteInstance) -> DualVector:
    if inst.n_edges and inst.cost.min() < 0:
        raise ValueError("cold start needs nonnegative costs")
    return DualVector.zeros(inst.n_left, inst.n_right)


def check_iteration_bound(stats: SolveStats) -> None:
    """Every dual update gains at least one unit of objective; fail loudly if not."""
    gain = stats.final_dual_objective - stats.initial_dual_objective
    if stats.iterations > gain:
        raise RuntimeError(
            f"iteration bound violated: {stats.iterations} iterations, objective gain {gain}"
        )


def _tight_adjacency(slack: np.ndarray) -> list[list[int]]:
    rows, cols = np.nonzero(slack == 0)
    adj: list[list[int]] = [[] for _ in range(slack.shape[0])]
    for i, j in zip(rows.tolist(), cols.tolist()):
        adj[i].append(j)
    return adj


def solve_mwpm(
    inst: BipartiteInstance,
    y_init: DualVector | None = None,
    use_tighten: bool = False,
    check_invariants: bool = False,
) -> SolveResult:
    """Minimum-weight perfect matching, warm-started from ``y_init``.

    ``y_init`` must be feasible (see :func:`dualwarm.feasibility.project_duals`
    for repairing predictions); ``None`` means the all-zero dual. Missing
    edges are allowed; if no perfect matching exists the solve raises
    :class:`InfeasibleInstanceError`.

    ``stats.iterations`` counts dual updates. Each raises the dual objective
    by at least one, so it never exceeds the objective gap between the final
    and initial duals.
    """
    if not inst.is_square:
        raise ValueError("perfect matching needs n_left == n_right")
    start = time.perf_counter()
    n = inst.n_left
    if y_init is None:
        y_init = cold_start_dual(inst)
    if (y_init.n_left, y_init.n_right) != (n, n):
        raise ValueError("dual dimensions do not match the instance")
    if not np.array_equal(inst.present.sum(axis=0) > 0, np.ones(n, bool)) and n:
        raise InfeasibleInstanceError("some right vertex has no edges")
    if n and inst.n_edges:
        s0 = edge_slacks(inst, y_init)
        if s0.min() < 0:
            raise InfeasibleDualError(
                "initial dual is infeasible; repair it with project_duals first"
            )
    y = tighten(inst, y_init) if use_tighten else y_init
    stats = SolveStats(initial_dual_objective=y_init.objective())

    y_left = y.y_left.astype(np.int64).copy()
    y_right = y.y_right.astype(np.int64).copy()
    present = inst.present
    complete = inst.is_complete
    slack = np.where(present, inst.dense - y_left[:, None] - y_right[None, :], MISSING)

    mate_l = [-1] * n
    mate_r = [-1] * n
    matched = 0
    while True:
        adj = _tight_adjacency(slack)
        aug = _hopcroft_karp(adj, mate_l, mate_r)
        stats.augmentations += aug
        matched += aug
        if matched == n:
            break
        seen_l, seen_r = _alternating_reach(adj, mate_l, mate_r)
        s_mask = np.array(seen_l, dtype=bool)
        g_mask = np.array(seen_r, dtype=bool)
        block = slack[np.ix_(s_mask, ~g_mask)]
        eps = int(block.min()) if block.size else MISSING
        if eps >= MISSING:
            raise InfeasibleInstanceError(
                "no edge leaves the Hall violator; no perfect matching exists",
                np.flatnonzero(s_mask).tolist(),
            )
        y_left[s_mask] += eps
        y_right[g_mask] -= eps
        slack[s_mask, :] -= eps
        slack[:, g_mask] += eps
        if not complete:
            slack[~present] = MISSING
        stats.iterations += 1
        if check_invariants:
            assert eps >= 1
            assert int(slack[present].min()) >= 0, "dual became infeasible"
            assert all(slack[i, mate_l[i]] == 0 for i in range(n) if mate_l[i] >= 0)

    y_final = DualVector(y_left, y_right)
    stats.final_dual_objective = y_final.objective()
    check_iteration_bound(stats)
    stats.wall_time = time.perf_counter() - start
    matching = Matching.from_pairs(inst, enumerate(mate_l))
    return SolveResult(matching, y_final, stats)
