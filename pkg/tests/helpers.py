"""Random instance factories shared by the test modules."""

from __future__ import annotations

import numpy as np

from dualwarm.graph import BipartiteInstance, DualVector


def random_matrix(rng: np.random.Generator, n: int, hi: int = 20) -> np.ndarray:
    return rng.integers(0, hi + 1, size=(n, n))


def random_instance(rng: np.random.Generator, n: int, hi: int = 20) -> BipartiteInstance:
    return BipartiteInstance.from_matrix(random_matrix(rng, n, hi))


def random_feasible_dual(
    rng: np.random.Generator, inst: BipartiteInstance, spread: int = 10
) -> DualVector:
    """A feasible dual: random left prices, right prices pushed below every edge."""
    yl = rng.integers(-spread, spread + 1, size=inst.n_left)
    reduced = np.where(inst.present, inst.dense - yl[:, None], np.iinfo(np.int64).max)
    yr = reduced.min(axis=0) - rng.integers(0, spread + 1, size=inst.n_right)
    return DualVector(yl, yr)


def random_prediction(rng: np.random.Generator, inst: BipartiteInstance, hi: int) -> DualVector:
    """An arbitrary, usually infeasible, integer dual."""
    return DualVector(
        rng.integers(-hi, 2 * hi + 1, size=inst.n_left),
        rng.integers(-hi, 2 * hi + 1, size=inst.n_right),
    )


def perturb(rng: np.random.Generator, y: DualVector, mass: int) -> DualVector:
    """Add integer noise of exactly ``mass`` total absolute value."""
    arr = y.as_array().copy()
    coords = rng.integers(0, arr.size, size=mass)
    signs = rng.choice([-1, 1], size=mass)
    # Keep each coordinate's moves in one direction so the l1 mass is exact.
    direction = {}
    for c, s in zip(coords.tolist(), signs.tolist()):
        arr[c] += direction.setdefault(c, s)
    return DualVector.from_array(arr, y.n_left)
