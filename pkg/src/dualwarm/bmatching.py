"""Minimum-weight perfect b-matching by a flow-based primal-dual scheme.

Each round builds the network ``s -> i (b_i)``, ``i -> j`` for tight edges
(capacity ``sum(b_left)``, which no s-t flow can exceed), ``j -> t (b_j)``,
and computes a maximum flow. A non-saturating flow yields a demand-weighted
Hall violator from the minimum cut, and the duals move exactly as in the
unit-demand solver.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from dualwarm.graph import (
    BipartiteInstance,
    DualVector,
    InfeasibleDualError,
    InfeasibleInstanceError,
    edge_slacks,
)
from dualwarm.hungarian import HallViolator, SolveStats, check_iteration_bound


@dataclass(frozen=True, eq=False)
class BInstance:
    """A bipartite instance with a positive integer demand per vertex."""

    graph: BipartiteInstance
    b_left: np.ndarray
    b_right: np.ndarray

    def __post_init__(self) -> None:
        bl = np.asarray(self.b_left, dtype=np.int64)
        br = np.asarray(self.b_right, dtype=np.int64)
        if bl.shape != (self.graph.n_left,) or br.shape != (self.graph.n_right,):
            raise ValueError("demand vectors must match the vertex counts")
        if (bl.size and bl.min() < 1) or (br.size and br.min() < 1):
            raise ValueError("demands must be >= 1")
        if bl.sum() != br.sum():
            raise ValueError(
                f"unbalanced demands: left sums to {bl.sum()}, right to {br.sum()}"
            )
        object.__setattr__(self, "b_left", bl)
        object.__setattr__(self, "b_right", br)

    @property
    def max_demand(self) -> int:
        return int(max(self.b_left.max(initial=0), self.b_right.max(initial=0)))

    @property
    def total_demand(self) -> int:
        return int(self.b_left.sum())


@dataclass(frozen=True)
class BMatching:
    """Edge multiplicities ``x`` aligned with the instance's edge arrays."""

    x: np.ndarray
    cost: int

    def pairs(self, inst: BipartiteInstance) -> list[tuple[int, int, int]]:
        nz = np.flatnonzero(self.x)
        return [(int(inst.left[k]), int(inst.right[k]), int(self.x[k])) for k in nz]


class BSolveResult(NamedTuple):
    matching: BMatching
    dual: DualVector
    stats: SolveStats


@dataclass
class FlowNetwork:
    """Directed network with paired residual arcs.

    Arc ``k`` and ``k ^ 1`` are each other's reverse. Node 0 is the source,
    nodes ``1..n_left`` the left side, then the right side, then the sink.
    """

    n_nodes: int
    head: list[int] = field(default_factory=list)
    cap: list[int] = field(default_factory=list)
    out: list[list[int]] = field(default_factory=list)
    paths: int = 0

    def __post_init__(self) -> None:
        if not self.out:
            self.out = [[] for _ in range(self.n_nodes)]

    def add_arc(self, a: int, b: int, capacity: int) -> int:
        k = len(self.head)
        self.head += [b, a]
        self.cap += [capacity, 0]
        self.out[a].append(k)
        self.out[b].append(k + 1)
        return k


def tight_network(binst: BInstance, y: DualVector) -> tuple[FlowNetwork, list[int], np.ndarray]:
    """Flow network over tight edges; returns arc ids of the edge arcs."""
    g = binst.graph
    nl, nr = g.n_left, g.n_right
    net = FlowNetwork(nl + nr + 2)
    s, t = 0, nl + nr + 1
    big = binst.total_demand
    for i in range(nl):
        net.add_arc(s, 1 + i, int(binst.b_left[i]))
    tight = np.flatnonzero(edge_slacks(g, y) == 0)
    arcs = [net.add_arc(1 + int(g.left[k]), 1 + nl + int(g.right[k]), big) for k in tight]
    for j in range(nr):
        net.add_arc(1 + nl + j, t, int(binst.b_right[j]))
    return net, arcs, tight


def max_flow(net: FlowNetwork, s: int, t: int) -> tuple[int, list[bool]]:
    """Dinic's blocking-flow max flow, mutating residual capacities.

    Returns the flow value and the source side of a minimum cut (nodes
    reachable from ``s`` in the final residual network).
    """
    head, cap, out = net.head, net.cap, net.out
    total = 0
    while True:
        level = [-1] * net.n_nodes
        level[s] = 0
        q = deque([s])
        while q:
            a = q.popleft()
            for k in out[a]:
                if cap[k] > 0 and level[head[k]] < 0:
                    level[head[k]] = level[a] + 1
                    q.append(head[k])
        if level[t] < 0:
            return total, [lv >= 0 for lv in level]
        it = [0] * net.n_nodes
        while True:
            pushed = _augment(net, s, t, level, it)
            if not pushed:
                break
            total += pushed
            net.paths += 1


def _augment(net: FlowNetwork, s: int, t: int, level: list[int], it: list[int]) -> int:
    """One s-t path in the level graph, pushed to its bottleneck."""
    head, cap, out = net.head, net.cap, net.out
    path: list[int] = []
    a = s
    while a != t:
        arcs = out[a]
        while it[a] < len(arcs):
            k = arcs[it[a]]
            if cap[k] > 0 and level[head[k]] == level[a] + 1:
                break
            it[a] += 1
        else:
            if a == s:
                return 0
            level[a] = -1
            k = path.pop()
            a = head[k ^ 1]
            it[a] += 1
            continue
        path.append(k)
        a = head[k]
    pushed = min(cap[k] for k in path)
    for k in path:
        cap[k] -= pushed
        cap[k ^ 1] += pushed
    return pushed


def b_hall_violator(binst: BInstance, y: DualVector, source_side: Sequence[bool]) -> HallViolator:
    """Left vertices on the source side of a min cut and their tight neighbours.

    A tight arc has capacity above any cut value, so no tight edge leaves
    the source side; a cut below ``sum(b_left)`` then forces
    ``sum(b[S]) > sum(b[neighbours])``.
    """
    g = binst.graph
    nl = g.n_left
    S = [i for i in range(nl) if source_side[1 + i]]
    s_mask = np.zeros(nl, bool)
    s_mask[S] = True
    tight = (edge_slacks(g, y) == 0) & s_mask[g.left]
    nbrs = sorted(set(g.right[tight].tolist()))
    if binst.b_left[S].sum() <= binst.b_right[nbrs].sum():
        raise ValueError("cut does not certify a Hall violation; was the flow saturating?")
    return HallViolator(tuple(S), tuple(nbrs))


def weighted_l1(y: DualVector, other: DualVector, b_left, b_right) -> int:
    """``sum_i b_i |y_i - other_i|``."""
    b = np.concatenate([np.asarray(b_left), np.asarray(b_right)]).astype(np.int64)
    diff = np.abs(y.as_array() - other.as_array())
    if diff.shape != b.shape:
        raise ValueError("dimension mismatch")
    return int((b * diff).sum())


def solve_mwbm(
    binst: BInstance, y_init: DualVector | None = None, check_invariants: bool = False
) -> BSolveResult:
    """Minimum-weight perfect b-matching from a feasible integer dual."""
    start = time.perf_counter()
    g = binst.graph
    nl, nr = g.n_left, g.n_right
    if y_init is None:
        y_init = DualVector.zeros(nl, nr)
    if g.n_edges and edge_slacks(g, y_init).min() < 0:
        raise InfeasibleDualError("initial dual is infeasible; repair it with project_b_duals first")
    b_l, b_r = binst.b_left, binst.b_right
    stats = SolveStats(initial_dual_objective=y_init.objective(b_l, b_r))
    y = y_init
    paths = 0
    target = binst.total_demand
    while True:
        net, arcs, tight_idx = tight_network(binst, y)
        value, source_side = max_flow(net, 0, nl + nr + 1)
        paths += net.paths
        if value == target:
            break
        viol = b_hall_violator(binst, y, source_side)
        s_mask = np.zeros(nl, bool)
        s_mask[list(viol.S)] = True
        g_mask = np.zeros(nr, bool)
        g_mask[list(viol.neighbours)] = True
        crossing = s_mask[g.left] & ~g_mask[g.right]
        if not crossing.any():
            raise InfeasibleInstanceError(
                "no edge leaves the demand-weighted Hall violator", viol.S
            )
        eps = int(edge_slacks(g, y)[crossing].min())
        yl = y.y_left.copy()
        yr = y.y_right.copy()
        yl[s_mask] += eps
        yr[g_mask] -= eps
        y = DualVector(yl, yr)
        stats.iterations += 1
        if check_invariants:
            assert eps >= 1
            assert edge_slacks(g, y).min() >= 0, "dual became infeasible"

    x = np.zeros(g.n_edges, dtype=np.int64)
    for k, a in zip(tight_idx.tolist(), arcs):
        x[k] = net.cap[a ^ 1]
    stats.final_dual_objective = y.objective(b_l, b_r)
    check_iteration_bound(stats)
    stats.augmentations = paths
    stats.wall_time = time.perf_counter() - start
    return BSolveResult(BMatching(x, int((x * g.cost).sum())), y, stats)
