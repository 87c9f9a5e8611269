"""Instance distributions: the synthetic type model and clustered point data.

Every random draw goes through :func:`stream_rng`, which derives an
independent generator from ``(seed, stream, index)``. Instance ``k`` of a
stream is therefore reproducible on its own, in any order or process.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dualwarm.graph import BipartiteInstance

# Reference shapes (points, features) of the UCI datasets used for the
# clustered instances. The CSVs themselves are user-supplied.
UCI_DATASETS = {
    "blog_feedback": (52_397, 281),
    "covertype": (581_012, 54),
    "kdd": (98_942, 38),
    "skin": (100_000, 4),
    "shuttle": (43_500, 10),
}

STREAMS = {"base": 0, "train": 1, "test": 2, "online": 3, "split": 4, "kmeans": 5, "sample": 6}


def stream_rng(seed: int, stream: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, STREAMS[stream], *index]))


@dataclass(frozen=True)
class TypeModelConfig:
    """Group-structured base weights plus per-instance integral noise."""

    n: int = 500
    groups: int = 50
    variance: int = 0
    mean_weight: int = 250
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.groups < 1 or self.n % self.groups:
            raise ValueError(f"groups={self.groups} must divide n={self.n}")
        if self.variance < 0 or int(self.variance) != self.variance:
            raise ValueError("variance must be a nonnegative integer")
        if self.mean_weight < 1:
            raise ValueError("mean_weight must be >= 1")


def type_model_base(cfg: TypeModelConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """``groups x groups`` geometric weights (support 1, 2, ...) with the configured mean."""
    if rng is None:
        rng = stream_rng(cfg.seed, "base")
    return rng.geometric(1.0 / cfg.mean_weight, size=(cfg.groups, cfg.groups)).astype(np.int64)


def type_model_noise(variance: int, size, rng: np.random.Generator) -> np.ndarray:
    """``Binomial(4v, 1/2) - 2v``: integral, mean 0, variance ``v``."""
    if variance == 0:
        return np.zeros(size, dtype=np.int64)
    return rng.binomial(4 * variance, 0.5, size=size).astype(np.int64) - 2 * variance


def type_model_instance(
    W: np.ndarray,
    cfg: TypeModelConfig,
    rng: np.random.Generator,
    stats: dict | None = None,
) -> BipartiteInstance:
    """Complete ``n x n`` instance with cost ``max(1, W[g(i), g(j)] + noise)``.

    If ``stats`` is given, ``stats["clamped"]`` receives the number of costs
    raised to 1.
    """
    group = np.repeat(np.arange(cfg.groups), cfg.n // cfg.groups)
    raw = W[np.ix_(group, group)] + type_model_noise(cfg.variance, (cfg.n, cfg.n), rng)
    if stats is not None:
        stats["clamped"] = int((raw < 1).sum())
    return BipartiteInstance.from_matrix(np.maximum(raw, 1))


# --------------------------------------------------------------------------
# Point data and clustering


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if not np.isfinite(p).all():
            raise ValueError("points must have finite coordinates")
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]


def load_points(
    path: str | os.PathLike,
    subsample: int | None = None,
    seed: int = 0,
    header: bool = False,
    delimiter: str = ",",
) -> PointSet:
    """Read numeric CSV rows, optionally keeping a seeded random subset."""
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh, delimiter=delimiter), 1):
            if header and lineno == 1:
                continue
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                vals = [float(f) for f in rec]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field in {rec!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(vals)}")
            if not all(np.isfinite(vals)):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
    pts = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    if subsample is not None and subsample < len(pts):
        keep = np.sort(stream_rng(seed, "sample").choice(len(pts), subsample, replace=False))
        pts = pts[keep]
    return PointSet(pts)


def save_points(path: str | os.PathLike, points: PointSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in points.points:
            w.writerow([repr(float(v)) for v in row])


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    history: list[float] = field(default_factory=list)


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] - 2 * x @ c.T + (c * c).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # Every point coincides with a centre; take any unused index.
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(x, x[nxt : nxt + 1])[:, 0])
    return x[chosen].copy()


def kmeans(
    x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 50, tol: float = 1e-6
) -> KMeansResult:
    """k-means++ seeding then Lloyd iterations.

    ``history`` holds the objective after each assignment step. A cluster
    that loses all its points keeps its previous centre, which keeps the
    objective non-increasing.
    """
    if not 1 <= k <= len(x):
        raise ValueError(f"k={k} must be between 1 and the number of points ({len(x)})")
    centers = kmeans_plus_plus(x, k, rng)
    history: list[float] = []
    labels = np.zeros(len(x), dtype=np.int64)
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        labels = d.argmin(1)
        obj = float(d[np.arange(len(x)), labels].sum())
        if history and history[-1] - obj <= tol * max(history[-1], 1e-300):
            history.append(obj)
            break
        history.append(obj)
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
    return KMeansResult(labels, centers, history)


@dataclass(frozen=True)
class ClusterModelConfig:
    k: int
    scale: float = 1000.0
    seed: int = 0
    max_iter: int = 50
    tol: float = 1e-6
    points_path: str | None = None
    subsample: int | None = None


@dataclass
class ClusterPrep:
    left_points: np.ndarray
    right_points: np.ndarray
    left: KMeansResult
    right: KMeansResult


def cluster_model_prepare(points: PointSet, cfg: ClusterModelConfig) -> ClusterPrep:
    """Split the points in half at random and cluster each half."""
    n = len(points)
    half = n // 2
    if cfg.k < 1 or cfg.k > half:
        raise ValueError(f"k={cfg.k} exceeds the {half} points available per side")
    perm = stream_rng(cfg.seed, "split").permutation(n)
    xl = points.points[np.sort(perm[:half])]
    xr = points.points[np.sort(perm[half : 2 * half])]
    left = kmeans(xl, cfg.k, stream_rng(cfg.seed, "kmeans", 0), cfg.max_iter, cfg.tol)
    right = kmeans(xr, cfg.k, stream_rng(cfg.seed, "kmeans", 1), cfg.max_iter, cfg.tol)
    return ClusterPrep(xl, xr, left, right)


def _one_per_cluster(x: np.ndarray, labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(k + 1))
    sizes = np.diff(bounds)
    if (sizes == 0).any():
        raise ValueError(f"cluster {int(np.flatnonzero(sizes == 0)[0])} is empty")
    picks = bounds[:-1] + (rng.random(k) * sizes).astype(np.int64)
    return x[order[picks]]


def cluster_model_instance(
    prep: ClusterPrep, cfg: ClusterModelConfig, rng: np.random.Generator
) -> BipartiteInstance:
    """``k x k`` instance from one random point per cluster on each side."""
    pl = _one_per_cluster(prep.left_points, prep.left.labels, cfg.k, rng)
    pr = _one_per_cluster(prep.right_points, prep.right.labels, cfg.k, rng)
    dist = np.sqrt(_sq_dists(pl, pr))
    return BipartiteInstance.from_matrix(np.rint(cfg.scale * dist).astype(np.int64))


def dataset_dir() -> Path:
    """Directory for point CSVs, from ``DUALWARM_DATA`` (default ``./data``)."""
    return Path(os.environ.get("DUALWARM_DATA", "data"))
