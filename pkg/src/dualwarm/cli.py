"""Command-line entry point: ``dualwarm <command> ...``.

Exit codes: 0 success, 2 infeasible instance, 3 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from dualwarm import bench, formats
from dualwarm.bmatching import solve_mwbm
from dualwarm.feasibility import project_b_duals, project_duals
from dualwarm.graph import InfeasibleDualError, InfeasibleInstanceError, is_dual_feasible
from dualwarm.instancegen import (
    ClusterModelConfig,
    TypeModelConfig,
    cluster_model_instance,
    cluster_model_prepare,
    dataset_dir,
    load_points,
    stream_rng,
    type_model_base,
    type_model_instance,
)
from dualwarm.learning import erm_median, optimal_dual
from dualwarm.oracle import OracleBudgetError, brute_mwbm, brute_mwpm

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=False))


def _load_json(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise bench.ConfigError(f"{path}: {exc}") from None


def _points_path(p: str) -> Path:
    path = Path(p)
    if not path.is_absolute() and not path.exists():
        path = dataset_dir() / path
    return path


# --------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raw = _load_json(args.config)
    if args.model == "type-model":
        for key in ("n", "groups", "variance", "mean_weight", "seed"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = val
        try:
            cfg = TypeModelConfig(**raw)
        except (TypeError, ValueError) as exc:
            raise bench.ConfigError(str(exc)) from None
        W = type_model_base(cfg)
        for k in range(args.count):
            info: dict = {}
            inst = type_model_instance(W, cfg, stream_rng(cfg.seed, "train", 0, k), info)
            path = out / f"instance_{k:04d}.txt"
            formats.write_instance(path, inst)
            _emit({"file": str(path), "n": cfg.n, "clamped": info["clamped"]})
    else:
        for key in ("k", "scale", "seed", "subsample"):
            val = getattr(args, key)
            if val is not None:
                raw[key] = val
        if args.points:
            raw["points_path"] = args.points
        if "points_path" not in raw or "k" not in raw:
            raise bench.ConfigError("cluster generation needs --points and --k")
        try:
            cfg = ClusterModelConfig(**raw)
            pts = load_points(_points_path(cfg.points_path), cfg.subsample, cfg.seed)
            prep = cluster_model_prepare(pts, cfg)
        except (TypeError, ValueError, OSError) as exc:
            raise bench.ConfigError(str(exc)) from None
        for k in range(args.count):
            inst = cluster_model_instance(prep, cfg, stream_rng(cfg.seed, "train", 0, k))
            path = out / f"instance_{k:04d}.txt"
            formats.write_instance(path, inst)
            _emit({"file": str(path), "n": cfg.k})
    return EXIT_OK


def cmd_learn(args) -> int:
    instances = [formats.read_instance(p) for p in args.instances]
    dims = {(i.n_left, i.n_right) for i in instances}
    if len(dims) != 1:
        raise bench.ConfigError(f"training instances have different sizes: {sorted(dims)}")
    samples = [optimal_dual(inst) for inst in instances]
    bound = max(i.max_cost for i in instances) if args.clamp else None
    pred = erm_median(samples, bound=bound)
    formats.write_dual(args.out, pred.dual)
    _emit(
        {
            "out": args.out,
            "samples": len(samples),
            "training_loss": float(pred.training_loss),
            "training_loss_exact": str(pred.training_loss),
        }
    )
    return EXIT_OK


def cmd_project(args) -> int:
    if args.b:
        binst = formats.read_b_instance(args.instance)
        y = formats.read_dual(args.dual)
        y2 = project_b_duals(binst.graph, y, binst.b_left, binst.b_right)
        inst = binst.graph
    else:
        inst = formats.read_instance(args.instance)
        y = formats.read_dual(args.dual)
        y2 = project_duals(inst, y)
    formats.write_dual(args.out, y2)
    _emit(
        {
            "out": args.out,
            "l1_change": y.l1_distance(y2),
            "feasible": is_dual_feasible(inst, y2),
        }
    )
    return EXIT_OK


def _seed_dual(args, inst, project):
    if not args.dual:
        return None
    y = formats.read_dual(args.dual)
    if args.project:
        y = project(inst, y)
    return y


def cmd_solve(args) -> int:
    from dualwarm.hungarian import solve_mwpm

    inst = formats.read_instance(args.instance)
    y = _seed_dual(args, inst, project_duals)
    res = solve_mwpm(inst, y, use_tighten=args.tighten)
    _emit({"pairs": [list(p) for p in res.matching.pairs], "cost": res.matching.cost})
    if args.stats_json:
        _emit({"stats": res.stats.as_dict()})
    if args.out_dual:
        formats.write_dual(args.out_dual, res.dual)
    return EXIT_OK


def cmd_solve_b(args) -> int:
    binst = formats.read_b_instance(args.instance)
    y = _seed_dual(
        args, binst.graph, lambda g, d: project_b_duals(g, d, binst.b_left, binst.b_right)
    )
    res = solve_mwbm(binst, y)
    _emit({"x": [list(t) for t in res.matching.pairs(binst.graph)], "cost": res.matching.cost})
    if args.stats_json:
        _emit({"stats": res.stats.as_dict()})
    if args.out_dual:
        formats.write_dual(args.out_dual, res.dual)
    return EXIT_OK


def cmd_bench(args) -> int:
    raw = _load_json(args.config)
    raw["mode"] = args.mode
    cfg = bench.ExperimentConfig.from_dict(raw)
    cfg = bench.with_overrides(cfg, seed=args.seed, out=args.out, workers=args.workers)
    rows = bench.run(cfg)
    meta = bench.summary_metadata(cfg, rows)
    if cfg.out:
        bench.emit_csv(rows, cfg.out)
        Path(cfg.out).with_suffix(".summary.json").write_text(json.dumps(meta, indent=2))
    for rec in meta["iterations"]:
        _emit(rec)
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        if args.b:
            binst = formats.read_b_instance(args.instance)
            g = binst.graph
            res = brute_mwbm(g.dense, binst.b_left.tolist(), binst.b_right.tolist(), g.present)
            if res is None:
                raise InfeasibleInstanceError("no perfect b-matching exists")
            _emit({"cost": res[0]})
        else:
            cost, pairs = brute_mwpm(formats.read_instance(args.instance))
            _emit({"cost": cost, "pairs": [list(p) for p in pairs]})
    except OracleBudgetError as exc:
        raise bench.ConfigError(str(exc)) from None
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualwarm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate instance files")
    g.add_argument("model", choices=["type-model", "cluster"])
    g.add_argument("--config", help="JSON file with generator fields")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--groups", type=int)
    g.add_argument("--variance", type=int)
    g.add_argument("--mean-weight", dest="mean_weight", type=int)
    g.add_argument("--points", help="CSV point file (relative paths also tried under $DUALWARM_DATA)")
    g.add_argument("--k", type=int)
    g.add_argument("--scale", type=float)
    g.add_argument("--subsample", type=int)
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("learn", help="learn a dual prediction from instances")
    g.add_argument("instances", nargs="+")
    g.add_argument("--out", required=True)
    g.add_argument("--clamp", action="store_true", help="clamp to [-C, C]")
    g.set_defaults(func=cmd_learn)

    g = sub.add_parser("project", help="repair a dual into a feasible one")
    g.add_argument("instance")
    g.add_argument("dual")
    g.add_argument("--out", required=True)
    g.add_argument("--b", action="store_true", help="instance carries demands")
    g.set_defaults(func=cmd_project)

    for name, func in (("solve", cmd_solve), ("solve-b", cmd_solve_b)):
        g = sub.add_parser(name, help="exact min-cost perfect " + ("b-matching" if "b" in name else "matching"))
        g.add_argument("instance")
        g.add_argument("--dual", help="feasible seed dual file")
        g.add_argument("--project", action="store_true", help="repair the seed dual first")
        if name == "solve":
            g.add_argument("--tighten", action="store_true")
        g.add_argument("--stats-json", dest="stats_json", action="store_true")
        g.add_argument("--out-dual", dest="out_dual")
        g.set_defaults(func=func)

    g = sub.add_parser("bench", help="run a batch or online experiment")
    g.add_argument("mode", choices=["batch", "online"])
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--workers", type=int)
    g.set_defaults(func=cmd_bench)

    g = sub.add_parser("oracle", help="brute-force optimum of a small instance")
    g.add_argument("instance")
    g.add_argument("--b", action="store_true")
    g.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InfeasibleInstanceError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (bench.ConfigError, formats.FormatError, InfeasibleDualError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
