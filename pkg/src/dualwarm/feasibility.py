"""Repairing predicted duals into nearby feasible integer duals.

A prediction ``y_hat`` violates edge ``ij`` by ``r_ij = y_hat_i + y_hat_j - c_ij``
when that is positive. Subtracting a nonnegative ``delta`` with
``delta_i + delta_j >= r_ij`` on every violated edge restores feasibility;
minimising ``sum(delta)`` (or ``sum(b * delta)``) is a weighted
vertex-cover LP, approximated here within a factor of two.

Vertices of a violation graph live in one index space: left vertex ``i`` is
``i`` and right vertex ``j`` is ``n_left + j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from dualwarm.graph import BipartiteInstance, DualVector, edge_slacks


@dataclass(frozen=True)
class ViolationGraph:
    """Edges with positive residual ``r``, in instance edge order."""

    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        if self.r.size and self.r.min() < 1:
            raise ValueError("violation residuals must be positive integers")

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Sequence[tuple[int, int, int]]) -> ViolationGraph:
        arr = np.array(list(edges), dtype=np.int64).reshape(-1, 3)
        return cls(n_vertices, arr[:, 0], arr[:, 1], arr[:, 2])

    @property
    def n_edges(self) -> int:
        return int(self.r.size)

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.r.tolist()))

    def is_cover(self, delta: Sequence) -> bool:
        """Whether ``delta_u + delta_v >= r`` on every edge."""
        return all(delta[a] + delta[b] >= r for a, b, r in self.edges())


def violation_graph(inst: BipartiteInstance, y_hat: DualVector) -> ViolationGraph:
    s = edge_slacks(inst, y_hat)
    bad = np.flatnonzero(s < 0)
    return ViolationGraph(
        inst.n_left + inst.n_right,
        inst.left[bad],
        inst.right[bad] + inst.n_left,
        -s[bad],
    )


def _csr(vg: ViolationGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Neighbour lists sorted by (vertex, neighbour) as CSR arrays."""
    src = np.concatenate([vg.u, vg.v])
    dst = np.concatenate([vg.v, vg.u])
    res = np.concatenate([vg.r, vg.r])
    order = np.lexsort((dst, src))
    indptr = np.zeros(vg.n_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=vg.n_vertices), out=indptr[1:])
    return indptr, dst[order], res[order]


def fast_approx_cover(vg: ViolationGraph) -> np.ndarray:
    """Greedy walk giving a 2-approximate integral cover ``delta``.

    Start at the lowest-index vertex that still has edges. At each vertex,
    charge it the largest residual among its remaining edges, delete it,
    and step to the neighbour on that edge (lowest index on ties). The walk
    ends at a vertex with no remaining edges. Every vertex's neighbour list
    is scanned once, so the whole procedure is linear.
    """
    n = vg.n_vertices
    delta = np.zeros(n, dtype=np.int64)
    if vg.n_edges == 0:
        return delta
    indptr, nbr, res = _csr(vg)
    ptr = indptr.tolist()
    nbr_l = nbr.tolist()
    res_l = res.tolist()
    deleted = [False] * n
    out = [0] * n

    for start in range(n):
        if deleted[start]:
            continue
        i = start
        while True:
            best_r = 0
            best_j = -1
            for k in range(ptr[i], ptr[i + 1]):
                j = nbr_l[k]
                # Neighbours are ascending, so strict > keeps the lowest index.
                if not deleted[j] and res_l[k] > best_r:
                    best_r = res_l[k]
                    best_j = j
            deleted[i] = True
            if best_j < 0:
                break
            out[i] = best_r
            i = best_j
    delta[:] = out
    return delta


def project_duals(inst: BipartiteInstance, y_hat: DualVector) -> DualVector:
    """Feasible integer dual ``y_hat - delta`` with ``delta`` from :func:`fast_approx_cover`."""
    vg = violation_graph(inst, y_hat)
    if vg.n_edges == 0:
        return y_hat
    delta = fast_approx_cover(vg)
    return DualVector(y_hat.y_left - delta[: inst.n_left], y_hat.y_right - delta[inst.n_left :])


def greedy_b_dual(
    vg: ViolationGraph, b: Sequence[int]
) -> tuple[list[int], list[Fraction]]:
    """Greedy fractional cover for the demand-weighted problem.

    Edges are taken by decreasing residual (ties by edge position) and each
    gets the largest ``gamma_e`` both endpoints' remaining demand allows.
    Then ``delta_i = sum(gamma_e * r_e for e at i) / b_i``, which covers every
    edge and costs exactly twice ``sum(gamma_e * r_e)``.
    """
    b = [int(x) for x in b]
    if len(b) != vg.n_vertices:
        raise ValueError("demand vector length does not match the violation graph")
    if any(x < 1 for x in b):
        raise ValueError("demands must be positive integers")
    u, v, r = vg.u.tolist(), vg.v.tolist(), vg.r.tolist()
    order = sorted(range(len(r)), key=lambda e: -r[e])
    remaining = list(b)
    gamma = [0] * len(r)
    weight = [0] * vg.n_vertices
    for e in order:
        a, c = u[e], v[e]
        g = min(remaining[a], remaining[c])
        if g <= 0:
            continue
        gamma[e] = g
        remaining[a] -= g
        remaining[c] -= g
        weight[a] += g * r[e]
        weight[c] += g * r[e]
    return gamma, [Fraction(w, bi) for w, bi in zip(weight, b)]


def round_b_perturbation(delta_frac: Sequence[Fraction]) -> np.ndarray:
    """``floor(2 * d)`` where ``d >= 1/2``, else 0."""
    half = Fraction(1, 2)
    out = []
    for d in delta_frac:
        d = Fraction(d)
        if d < 0:
            raise ValueError("fractional perturbation must be nonnegative")
        out.append(int(2 * d) if d >= half else 0)
    return np.array(out, dtype=np.int64)


def project_b_duals(
    inst: BipartiteInstance, y_hat: DualVector, b_left: Sequence[int], b_right: Sequence[int]
) -> DualVector:
    """Feasible integer dual for b-matching via the greedy cover and rounding."""
    vg = violation_graph(inst, y_hat)
    if vg.n_edges == 0:
        return y_hat
    _, frac = greedy_b_dual(vg, list(b_left) + list(b_right))
    delta = round_b_perturbation(frac)
    return DualVector(y_hat.y_left - delta[: inst.n_left], y_hat.y_right - delta[inst.n_left :])
