"""Exhaustive ground truth for small instances.

Nothing here imports the production solvers; the oracles read raw cost
matrices and edge lists only, so agreement with the solvers is evidence
rather than tautology. Budgets fail loudly instead of truncating.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class OracleBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_n: int = 8
    max_cover_vertices: int = 6
    max_residual: int = 10
    max_total_demand: int = 10


DEFAULT_BUDGET = OracleBudget()


def _cost_matrix(inst) -> np.ndarray:
    if hasattr(inst, "n_left"):
        if inst.n_left != inst.n_right:
            raise ValueError("oracle needs a square instance")
        if inst.n_edges != inst.n_left * inst.n_right:
            raise ValueError("oracle needs a complete instance")
        m = np.zeros((inst.n_left, inst.n_right), dtype=np.int64)
        for i, j, c in inst.edges():
            m[i, j] = c
        return m
    return np.asarray(inst, dtype=np.int64)


def brute_mwpm(inst, budget: OracleBudget = DEFAULT_BUDGET) -> tuple[int, list[tuple[int, int]]]:
    """Cheapest permutation by full enumeration of all ``n!`` of them.

    Accepts a complete ``BipartiteInstance`` or a square cost matrix.
    """
    c = _cost_matrix(inst)
    n = c.shape[0]
    if n > budget.max_n:
        raise OracleBudgetError(f"n={n} exceeds permutation budget {budget.max_n}")
    if n == 0:
        return 0, []
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = c[np.arange(n), perms].sum(axis=1)
    k = int(np.argmin(totals))
    return int(totals[k]), [(i, int(j)) for i, j in enumerate(perms[k])]


def brute_cover_opt(
    n_vertices: int,
    edges: Sequence[tuple[int, int, int]],
    budget: OracleBudget = DEFAULT_BUDGET,
    weights: Sequence[int] | None = None,
) -> int:
    """Exact integer optimum of ``min sum w_i d_i`` s.t. ``d_u + d_v >= r``.

    Every vertex but the last touched one ranges over ``[0, max r]``; for
    each such assignment the last vertex takes the least value its edges
    allow, which is optimal for nonnegative weights. Untouched vertices are
    zero at the optimum.
    """
    edges = [(int(a), int(b), int(r)) for a, b, r in edges]
    if not edges:
        return 0
    touched = sorted({a for a, _, _ in edges} | {b for _, b, _ in edges})
    if len(touched) > budget.max_cover_vertices:
        raise OracleBudgetError(f"{len(touched)} vertices exceed budget {budget.max_cover_vertices}")
    rmax = max(r for _, _, r in edges)
    if rmax > budget.max_residual:
        raise OracleBudgetError(f"residual {rmax} exceeds budget {budget.max_residual}")
    w_all = [1 if weights is None else int(weights[v]) for v in touched]
    if min(w_all) < 0:
        raise ValueError("weights must be nonnegative")
    last = touched[-1]
    pos = {v: k for k, v in enumerate(touched[:-1])}
    k = len(pos)
    grid = np.indices((rmax + 1,) * k).reshape(k, -1).T
    ok = np.ones(len(grid), dtype=bool)
    d_last = np.zeros(len(grid), dtype=np.int64)
    for a, b, r in edges:
        if last in (a, b):
            other = b if a == last else a
            d_last = np.maximum(d_last, r - grid[:, pos[other]])
        else:
            ok &= grid[:, pos[a]] + grid[:, pos[b]] >= r
    w = np.array(w_all[:-1], dtype=np.int64)
    total = grid @ w + w_all[-1] * d_last
    return int(total[ok].min())


def brute_mwbm(
    costs,
    b_left: Sequence[int],
    b_right: Sequence[int],
    present=None,
    budget: OracleBudget = DEFAULT_BUDGET,
) -> tuple[int, np.ndarray] | None:
    """Cheapest perfect b-matching by enumerating integral edge multiplicities.

    ``costs`` is an ``n_left x n_right`` matrix; ``present`` masks absent
    edges. Returns ``None`` when no perfect b-matching exists.
    """
    c = np.asarray(costs, dtype=np.int64)
    nl, nr = c.shape
    if present is None:
        present = np.ones_like(c, dtype=bool)
    if max(sum(b_left), sum(b_right)) > budget.max_total_demand:
        raise OracleBudgetError("per-side demand exceeds budget")
    if sum(b_left) != sum(b_right):
        return None

    best: list = [None, None]
    x = np.zeros((nl, nr), dtype=np.int64)
    cap_r = list(b_right)

    def rows(i: int, running: int) -> None:
        if i == nl:
            if all(v == 0 for v in cap_r) and (best[0] is None or running < best[0]):
                best[0], best[1] = running, x.copy()
            return
        cols(i, 0, b_left[i], running)

    def cols(i: int, j: int, need: int, running: int) -> None:
        if j == nr:
            if need == 0:
                rows(i + 1, running)
            return
        hi = min(need, cap_r[j]) if present[i, j] else 0
        for k in range(hi + 1):
            x[i, j] = k
            cap_r[j] -= k
            cols(i, j + 1, need - k, running + k * int(c[i, j]))
            cap_r[j] += k
        x[i, j] = 0

    rows(0, 0)
    if best[0] is None:
        return None
    return int(best[0]), best[1]
