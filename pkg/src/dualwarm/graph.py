"""Bipartite instances, integer dual vectors, and slack queries.

Vertices are 0-based on each side. Left vertex ``i`` and right vertex ``j``
are separate index spaces; an edge is the pair ``(i, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

# Missing edges in the dense view carry this cost; it is never a real cost
# because construction rejects anything where C * n**2 could overflow.
MISSING = np.iinfo(np.int64).max // 4

_INT64_LIMIT = np.iinfo(np.int64).max


class InfeasibleInstanceError(ValueError):
    """The instance admits no perfect (b-)matching."""

    def __init__(self, message: str, violator: Iterable[int] = ()):
        super().__init__(message)
        self.violator = tuple(violator)


class InfeasibleDualError(ValueError):
    """A dual vector violates ``y_i + y_j <= c_ij`` on some edge."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BipartiteInstance:
    """A bipartite graph with nonnegative integer edge costs.

    Edges are stored as three parallel arrays (left index, right index,
    cost) in the order they were given. Use :meth:`from_edges` or
    :meth:`from_matrix` rather than the raw constructor.
    """

    n_left: int
    n_right: int
    left: np.ndarray
    right: np.ndarray
    cost: np.ndarray
    max_cost: int = field(init=False)

    def __post_init__(self) -> None:
        left, right, cost = _frozen(self.left), _frozen(self.right), _frozen(self.cost)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "cost", cost)
        if not (left.shape == right.shape == cost.shape) or left.ndim != 1:
            raise ValueError("edge arrays must be one-dimensional and equal length")
        if self.n_left < 0 or self.n_right < 0:
            raise ValueError("vertex counts must be nonnegative")
        if left.size:
            if left.min() < 0 or left.max() >= self.n_left:
                raise ValueError("left index out of range")
            if right.min() < 0 or right.max() >= self.n_right:
                raise ValueError("right index out of range")
            if cost.min() < 0:
                raise ValueError("edge costs must be nonnegative integers")
            keys = left * max(self.n_right, 1) + right
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate edge")
        c = int(cost.max()) if cost.size else 0
        n = max(self.n_left, self.n_right, 1)
        if c * n * n >= _INT64_LIMIT // 8:
            raise ValueError(f"max cost {c} too large for n={n}: C*n^2 would overflow")
        object.__setattr__(self, "max_cost", c)

    @classmethod
    def from_edges(
        cls, n_left: int, n_right: int, edges: Iterable[tuple[int, int, int]]
    ) -> BipartiteInstance:
        rows = list(edges)
        for e in rows:
            if any(int(v) != v for v in e):
                raise ValueError(f"non-integral edge {e!r}")
        arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return cls(n_left, n_right, arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def from_matrix(cls, costs) -> BipartiteInstance:
        """Complete bipartite instance from a 2-D integer cost array."""
        c = np.asarray(costs)
        if c.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if c.size and not np.array_equal(c, np.round(c)):
            raise ValueError("costs must be integral")
        c = c.astype(np.int64)
        n_left, n_right = c.shape
        ii, jj = np.meshgrid(np.arange(n_left), np.arange(n_right), indexing="ij")
        inst = cls(n_left, n_right, ii.ravel(), jj.ravel(), c.ravel())
        dense = c.copy()
        dense.setflags(write=False)
        inst.__dict__["dense"] = dense
        inst.__dict__["row_major"] = True
        return inst

    @property
    def n_edges(self) -> int:
        return int(self.cost.size)

    @property
    def is_square(self) -> bool:
        return self.n_left == self.n_right

    @property
    def is_complete(self) -> bool:
        return self.n_edges == self.n_left * self.n_right

    def edges(self) -> Iterator[tuple[int, int, int]]:
        return zip(self.left.tolist(), self.right.tolist(), self.cost.tolist())

    @cached_property
    def dense(self) -> np.ndarray:
        """``n_left x n_right`` cost matrix; absent edges hold ``MISSING``."""
        m = np.full((self.n_left, self.n_right), MISSING, dtype=np.int64)
        m[self.left, self.right] = self.cost
        m.setflags(write=False)
        return m

    @cached_property
    def row_major(self) -> bool:
        """Complete, with edges listed row by row (as :meth:`from_matrix` does)."""
        if not self.is_complete:
            return False
        cols = np.tile(np.arange(self.n_right), self.n_left)
        return bool(
            np.array_equal(self.left, np.repeat(np.arange(self.n_left), self.n_right))
            and np.array_equal(self.right, cols)
        )

    @cached_property
    def present(self) -> np.ndarray:
        m = np.zeros((self.n_left, self.n_right), dtype=bool)
        m[self.left, self.right] = True
        m.setflags(write=False)
        return m

    @cached_property
    def _index(self) -> dict[tuple[int, int], int]:
        return {(i, j): k for k, (i, j) in enumerate(zip(self.left.tolist(), self.right.tolist()))}

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per left vertex, ``(right, cost)`` pairs in edge order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_left)]
        for i, j, c in self.edges():
            adj[i].append((j, c))
        return adj

    def edge_cost(self, i: int, j: int) -> int:
        try:
            return int(self.cost[self._index[(i, j)]])
        except KeyError:
            raise KeyError(f"no edge ({i}, {j})") from None

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BipartiteInstance):
            return NotImplemented
        if (self.n_left, self.n_right, self.n_edges) != (other.n_left, other.n_right, other.n_edges):
            return False
        return bool(
            np.array_equal(self.present, other.present)
            and np.array_equal(self.dense, other.dense)
        )

    def __repr__(self) -> str:
        return (
            f"BipartiteInstance(n_left={self.n_left}, n_right={self.n_right}, "
            f"m={self.n_edges}, C={self.max_cost})"
        )


@dataclass(frozen=True, eq=False)
class DualVector:
    """Integer dual prices, one per left vertex and one per right vertex."""

    y_left: np.ndarray
    y_right: np.ndarray

    def __post_init__(self) -> None:
        for name in ("y_left", "y_right"):
            raw = np.asarray(getattr(self, name))
            if raw.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if raw.size and not np.issubdtype(raw.dtype, np.integer):
                if not np.array_equal(raw, np.round(raw)):
                    raise ValueError("dual values must be integral")
            object.__setattr__(self, name, _frozen(raw))

    @classmethod
    def zeros(cls, n_left: int, n_right: int) -> DualVector:
        return cls(np.zeros(n_left, np.int64), np.zeros(n_right, np.int64))

    @classmethod
    def from_array(cls, values, n_left: int) -> DualVector:
        values = np.asarray(values)
        return cls(values[:n_left], values[n_left:])

    @property
    def n_left(self) -> int:
        return int(self.y_left.size)

    @property
    def n_right(self) -> int:
        return int(self.y_right.size)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.y_left, self.y_right])

    def objective(self, b_left=None, b_right=None) -> int:
        """Dual objective ``sum_i b_i y_i`` (``b = 1`` when omitted)."""
        if b_left is None:
            return int(self.y_left.sum() + self.y_right.sum())
        return int(np.dot(b_left, self.y_left) + np.dot(b_right, self.y_right))

    def l1_distance(self, other: DualVector) -> int:
        return int(np.abs(self.as_array() - other.as_array()).sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DualVector):
            return NotImplemented
        return np.array_equal(self.y_left, other.y_left) and np.array_equal(
            self.y_right, other.y_right
        )

    def __repr__(self) -> str:
        return f"DualVector(y_left={self.y_left.tolist()}, y_right={self.y_right.tolist()})"


@dataclass(frozen=True)
class Matching:
    """Vertex-disjoint ``(left, right)`` pairs and their total cost."""

    pairs: tuple[tuple[int, int], ...]
    cost: int

    def __post_init__(self) -> None:
        lefts = [i for i, _ in self.pairs]
        rights = [j for _, j in self.pairs]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise ValueError("matching pairs are not vertex-disjoint")

    @classmethod
    def from_pairs(cls, inst: BipartiteInstance, pairs: Iterable[tuple[int, int]]) -> Matching:
        pairs = tuple(sorted((int(i), int(j)) for i, j in pairs))
        dense, present = inst.dense, inst.present
        for i, j in pairs:
            if not present[i, j]:
                raise KeyError(f"no edge ({i}, {j})")
        return cls(pairs, int(sum(int(dense[i, j]) for i, j in pairs)))

    def __len__(self) -> int:
        return len(self.pairs)

    def is_perfect(self, n: int) -> bool:
        return len(self.pairs) == n


def complete_instance(inst: BipartiteInstance) -> BipartiteInstance:
    """Add every missing edge with cost ``C * n**2``.

    No minimum-cost perfect matching of the original graph uses a filler
    edge, since any one of them costs more than ``n * C``.
    """
    if not inst.is_square:
        raise ValueError("completion requires n_left == n_right")
    if inst.is_complete:
        return inst
    n = inst.n_left
    costs = np.where(inst.present, inst.dense, inst.max_cost * n * n)
    return BipartiteInstance.from_matrix(costs)


def _check_dims(inst: BipartiteInstance, y: DualVector) -> None:
    if y.n_left != inst.n_left or y.n_right != inst.n_right:
        raise ValueError(
            f"dual has shape ({y.n_left}, {y.n_right}), instance ({inst.n_left}, {inst.n_right})"
        )


def edge_slacks(inst: BipartiteInstance, y: DualVector) -> np.ndarray:
    """Slack of every edge, aligned with ``inst.cost``."""
    _check_dims(inst, y)
    if inst.row_major:
        out = np.subtract(inst.dense, y.y_left[:, None])
        out -= y.y_right[None, :]
        return out.ravel()
    return inst.cost - y.y_left[inst.left] - y.y_right[inst.right]


def slack(inst: BipartiteInstance, y: DualVector, edge: tuple[int, int]) -> int:
    """``c_ij - y_i - y_j``; negative when ``y`` is infeasible on the edge."""
    i, j = edge
    return inst.edge_cost(i, j) - int(y.y_left[i]) - int(y.y_right[j])


def is_dual_feasible(inst: BipartiteInstance, y: DualVector) -> bool:
    return bool(inst.n_edges == 0 or edge_slacks(inst, y).min() >= 0)


def tight_subgraph(inst: BipartiteInstance, y: DualVector) -> list[tuple[int, int]]:
    """Edges with zero slack, in edge order. ``y`` must be feasible."""
    s = edge_slacks(inst, y)
    if s.size and s.min() < 0:
        k = int(np.argmin(s))
        raise InfeasibleDualError(
            f"edge ({inst.left[k]}, {inst.right[k]}) has negative slack {s[k]}"
        )
    idx = np.flatnonzero(s == 0)
    return list(zip(inst.left[idx].tolist(), inst.right[idx].tolist()))
