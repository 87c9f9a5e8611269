"""Batch and online warm-start experiments.

Three methods are compared on each test instance:

``cold``
    zero dual, no tightening (the plain Hungarian method).
``learned``
    learned prediction, repaired with :func:`project_duals`.
``learned_tighten``
    as ``learned``, then one tightening pass before solving.

Iteration counts are deterministic given the seed; wall times are not.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from dualwarm.feasibility import project_duals
from dualwarm.graph import BipartiteInstance, DualVector
from dualwarm.hungarian import SolveResult, solve_mwpm
from dualwarm.instancegen import (
    ClusterModelConfig,
    TypeModelConfig,
    cluster_model_instance,
    cluster_model_prepare,
    load_points,
    stream_rng,
    type_model_base,
    type_model_instance,
)
from dualwarm.learning import OnlineMedian, erm_median

METHODS = ("cold", "learned", "learned_tighten")
CSV_COLUMNS = (
    "method",
    "mode",
    "step",
    "iterations",
    "augmentations",
    "wall_time_s",
    "projection_time_s",
    "dual_gap",
    "seed",
    "repetition",
    "cost",
)
TIMING_COLUMNS = ("wall_time_s", "projection_time_s")
CI_METHOD = "normal approximation: mean +/- 1.96 * sample std / sqrt(count)"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "batch"
    generator: str = "type"
    type_model: TypeModelConfig = field(default_factory=TypeModelConfig)
    cluster_model: ClusterModelConfig | None = None
    s_train: int = 20
    n_test: int = 10
    steps: int = 20
    repetitions: int = 20
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    out: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in ("batch", "online"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.generator not in ("type", "cluster"):
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator == "cluster" and self.cluster_model is None:
            raise ConfigError("cluster generator needs a cluster_model section")
        for name in ("s_train", "n_test", "steps", "repetitions", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            if "type_model" in raw:
                raw["type_model"] = TypeModelConfig(**raw["type_model"])
            if raw.get("cluster_model") is not None:
                raw["cluster_model"] = ClusterModelConfig(**raw["cluster_model"])
            if "methods" in raw:
                raw["methods"] = tuple(raw["methods"])
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | os.PathLike) -> ExperimentConfig:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ResultRow:
    method: str
    mode: str
    step: int
    iterations: int
    augmentations: int
    wall_time_s: float
    projection_time_s: float
    dual_gap: int
    seed: int
    repetition: int = 0
    cost: int = 0


# --------------------------------------------------------------------------
# Instance sources


class InstanceSource:
    """Draws instances for one experiment; the distribution may vary by repetition."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._prep = None
        self._bases: dict[int, np.ndarray] = {}
        if cfg.generator == "cluster":
            cm = cfg.cluster_model
            if cm.points_path is None:
                raise ConfigError("cluster_model.points_path is required")
            pts = load_points(cm.points_path, subsample=cm.subsample, seed=cm.seed)
            self._prep = cluster_model_prepare(pts, cm)

    def _base(self, repetition: int) -> np.ndarray:
        if repetition not in self._bases:
            tm = self.cfg.type_model
            rng = stream_rng(tm.seed, "base") if repetition == 0 else stream_rng(tm.seed, "base", repetition)
            self._bases[repetition] = type_model_base(tm, rng)
        return self._bases[repetition]

    def draw(self, stream: str, index: int, repetition: int = 0) -> BipartiteInstance:
        rng = stream_rng(self.cfg.seed, stream, repetition, index)
        if self.cfg.generator == "type":
            return type_model_instance(self._base(repetition), self.cfg.type_model, rng)
        return cluster_model_instance(self._prep, self.cfg.cluster_model, rng)


# --------------------------------------------------------------------------
# Running one method


def run_method(
    method: str, inst: BipartiteInstance, prediction: DualVector | None
) -> tuple[SolveResult, float]:
    """Solve ``inst`` with ``method``; returns the result and projection seconds."""
    proj_time = 0.0
    if method == "cold" or prediction is None:
        seed_dual = None
    else:
        t0 = time.perf_counter()
        seed_dual = project_duals(inst, prediction)
        proj_time = time.perf_counter() - t0
    return solve_mwpm(inst, seed_dual, use_tighten=(method == "learned_tighten")), proj_time


def _row(method, mode, step, res: SolveResult, proj_time, seed, repetition) -> ResultRow:
    st = res.stats
    return ResultRow(
        method=method,
        mode=mode,
        step=step,
        iterations=st.iterations,
        augmentations=st.augmentations,
        wall_time_s=st.wall_time,
        projection_time_s=proj_time,
        dual_gap=st.final_dual_objective - st.initial_dual_objective,
        seed=seed,
        repetition=repetition,
        cost=res.matching.cost,
    )


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _max_cost(instances: Iterable[BipartiteInstance]) -> int:
    return max(inst.max_cost for inst in instances)


# --------------------------------------------------------------------------
# Batch


def _train(cfg: ExperimentConfig, source: InstanceSource):
    train = [source.draw("train", k) for k in range(cfg.s_train)]
    duals = [solve_mwpm(inst).dual for inst in train]
    return erm_median(duals, bound=_max_cost(train))


class _Task:
    """Picklable per-worker job; builds its instance source once per process."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._source: InstanceSource | None = None

    def __getstate__(self) -> dict:
        return {**self.__dict__, "_source": None}

    @property
    def source(self) -> InstanceSource:
        if self._source is None:
            self._source = InstanceSource(self.cfg)
        return self._source


class _BatchTask(_Task):
    def __init__(self, cfg: ExperimentConfig, prediction: DualVector, source: InstanceSource):
        super().__init__(cfg)
        self.prediction = prediction
        self._source = source

    def __call__(self, index: int) -> list[ResultRow]:
        inst = self.source.draw("test", index)
        rows = []
        for method in self.cfg.methods:
            res, proj = run_method(method, inst, self.prediction)
            rows.append(_row(method, "batch", index, res, proj, self.cfg.seed, 0))
        return rows


def run_batch(cfg: ExperimentConfig) -> list[ResultRow]:
    """Learn from ``s_train`` instances, evaluate each method on ``n_test`` fresh ones."""
    source = InstanceSource(cfg)
    predictor = _train(cfg, source)
    task = _BatchTask(cfg, predictor.dual, source)
    chunks = _map(task, list(range(cfg.n_test)), cfg.workers)
    rows = [r for chunk in chunks for r in chunk]
    return sort_rows(rows, cfg.methods)


# --------------------------------------------------------------------------
# Online


class _OnlineTask(_Task):
    def __call__(self, repetition: int) -> list[ResultRow]:
        cfg = self.cfg
        state: OnlineMedian | None = None
        rows = []
        for t in range(1, cfg.steps + 1):
            inst = self.source.draw("online", t, repetition)
            prediction = state.predictor() if state is not None else None
            optimum = None
            for method in cfg.methods:
                res, proj = run_method(method, inst, prediction)
                rows.append(_row(method, "online", t, res, proj, cfg.seed, repetition))
                if method == "cold":
                    optimum = res.dual
            if optimum is None:
                optimum = solve_mwpm(inst).dual
            if state is None:
                state = OnlineMedian(inst.n_left, inst.n_right)
            state.update(optimum)
        return rows


def run_online(cfg: ExperimentConfig) -> list[ResultRow]:
    """Stream ``steps`` instances per repetition, learning from the prefix."""
    chunks = _map(_OnlineTask(cfg), list(range(cfg.repetitions)), cfg.workers)
    return sort_rows([r for chunk in chunks for r in chunk], cfg.methods)


def run(cfg: ExperimentConfig) -> list[ResultRow]:
    return run_batch(cfg) if cfg.mode == "batch" else run_online(cfg)


def sort_rows(rows: Iterable[ResultRow], methods: Sequence[str] = METHODS) -> list[ResultRow]:
    rank = {m: k for k, m in enumerate(methods)}
    return sorted(rows, key=lambda r: (rank.get(r.method, len(rank)), r.step, r.repetition))


# --------------------------------------------------------------------------
# Summaries and CSV


@dataclass(frozen=True)
class Summary:
    mean: float
    half_width: float
    count: int

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def mean_ci(values: Sequence[float]) -> Summary:
    """Mean with a 95% normal-approximation confidence half-width."""
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise ValueError("no values to summarise")
    half = 1.96 * a.std(ddof=1) / math.sqrt(a.size) if a.size > 1 else 0.0
    return Summary(float(a.mean()), float(half), int(a.size))


def summarize(
    rows: Iterable[ResultRow], metric: str = "iterations", by_step: bool = False
) -> dict:
    """Per-method (or per method and step) summaries of ``metric``."""
    groups: dict = {}
    for r in rows:
        key = (r.method, r.step) if by_step else r.method
        groups.setdefault(key, []).append(getattr(r, metric))
    return {k: mean_ci(v) for k, v in sorted(groups.items(), key=lambda kv: str(kv[0]))}


def emit_csv(rows: Sequence[ResultRow], path: str | os.PathLike) -> None:
    if not rows:
        raise ValueError("refusing to write an empty result table")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([getattr(r, c) for c in CSV_COLUMNS])


def read_csv(path: str | os.PathLike) -> list[ResultRow]:
    types = {f.name: f.type for f in fields(ResultRow)}
    casts = {"str": str, "int": int, "float": float}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            out.append(ResultRow(**{k: casts[types[k]](v) for k, v in rec.items()}))
    return out


def summary_metadata(cfg: ExperimentConfig, rows: Sequence[ResultRow]) -> dict:
    by_step = cfg.mode == "online"
    summ = summarize(rows, "iterations", by_step=by_step)
    return {
        "config": cfg.to_dict(),
        "ci_method": CI_METHOD,
        "iterations": [
            {
                "method": k[0] if by_step else k,
                **({"step": k[1]} if by_step else {}),
                "mean": s.mean,
                "ci95": [s.low, s.high],
                "count": s.count,
            }
            for k, s in summ.items()
        ],
    }


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
