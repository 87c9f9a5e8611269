"""Learning a dual prediction from solved sample instances.

The target of a cost vector ``c`` is one fixed optimal dual ``y*(c)``: the
dual returned by a cold solve without tightening. The empirical loss of a
prediction is its mean ℓ1 distance to the sampled targets, and the
coordinate-wise median minimises it exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from dualwarm.graph import BipartiteInstance, DualVector
from dualwarm.hungarian import solve_mwpm


@dataclass(frozen=True)
class Predictor:
    dual: DualVector
    training_loss: Fraction


def optimal_dual(inst: BipartiteInstance) -> DualVector:
    """The fixed integral optimal dual ``y*(c)`` of ``inst``."""
    return solve_mwpm(inst, None, use_tighten=False).dual


def _stack(samples: Sequence[DualVector]) -> tuple[np.ndarray, int]:
    if len(samples) == 0:
        raise ValueError("need at least one sample dual")
    n_left = samples[0].n_left
    arr = [s.as_array() for s in samples]
    if any(a.shape != arr[0].shape for a in arr) or any(s.n_left != n_left for s in samples):
        raise ValueError("sample duals have different dimensions")
    return np.stack(arr), n_left


def empirical_loss(
    y: DualVector, samples: Sequence[DualVector], b: Sequence[int] | None = None
) -> Fraction:
    """Mean (optionally demand-weighted) ℓ1 distance from ``y`` to the samples."""
    mat, n_left = _stack(samples)
    if y.n_left != n_left or y.as_array().shape != mat.shape[1:]:
        raise ValueError("prediction and samples have different dimensions")
    diff = np.abs(mat - y.as_array())
    if b is not None:
        w = np.asarray(b, dtype=np.int64)
        if w.shape != mat.shape[1:]:
            raise ValueError("demand vector has the wrong length")
        diff = diff * w
    return Fraction(int(diff.sum()), len(samples))


def lower_median(values: np.ndarray, axis: int = 0) -> np.ndarray:
    s = values.shape[axis]
    return np.partition(values, (s - 1) // 2, axis=axis).take((s - 1) // 2, axis=axis)


def erm_median(
    samples: Sequence[DualVector],
    bound: int | None = None,
    b: Sequence[int] | None = None,
) -> Predictor:
    """Coordinate-wise lower median of the sample duals.

    ``bound`` clamps each coordinate to ``[-bound, bound]``; with samples
    inside that box the clamp is a no-op. The demand-weighted loss has the
    same minimiser since each coordinate's weight is a constant factor, so
    ``b`` only changes the reported training loss.
    """
    mat, n_left = _stack(samples)
    med = lower_median(mat)
    if bound is not None:
        med = np.clip(med, -bound, bound)
    dual = DualVector.from_array(med, n_left)
    return Predictor(dual, empirical_loss(dual, samples, b))


@dataclass
class OnlineMedian:
    """Per-coordinate running lower median over a growing sample stream.

    Each coordinate keeps a max-heap of the lower half and a min-heap of the
    upper half, so an update costs ``O(log s)`` per coordinate.
    """

    n_left: int
    n_right: int
    count: int = 0
    _low: list[list[int]] = field(default_factory=list, repr=False)
    _high: list[list[int]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        dim = self.n_left + self.n_right
        self._low = [[] for _ in range(dim)]
        self._high = [[] for _ in range(dim)]

    def update(self, sample: DualVector) -> OnlineMedian:
        if (sample.n_left, sample.n_right) != (self.n_left, self.n_right):
            raise ValueError("sample has the wrong dimensions")
        for low, high, v in zip(self._low, self._high, sample.as_array().tolist()):
            if low and v > -low[0]:
                heapq.heappush(high, v)
            else:
                heapq.heappush(low, -v)
            # Lower median lives on top of ``low``: len(low) = ceil(count / 2).
            if len(low) > len(high) + 1:
                heapq.heappush(high, -heapq.heappop(low))
            elif len(high) > len(low):
                heapq.heappush(low, -heapq.heappop(high))
        self.count += 1
        return self

    def predictor(self) -> DualVector | None:
        if self.count == 0:
            return None
        med = np.array([-low[0] for low in self._low], dtype=np.int64)
        return DualVector.from_array(med, self.n_left)


def online_update(state: OnlineMedian, new_sample: DualVector) -> OnlineMedian:
    return state.update(new_sample)


def learn_from_instances(
    instances: Iterable[BipartiteInstance], bound: int | None = None
) -> tuple[Predictor, list[DualVector]]:
    samples = [optimal_dual(inst) for inst in instances]
    return erm_median(samples, bound=bound), samples
