#!/usr/bin/env python3
"""
PLDM command-line toolchain
Dataset generation, world-model training, planning evaluation, the chase
task and significance tables.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from config_manager import ConfigManager
from datagen.generator import generate_dataset
from datagen.storage import load_dataset, save_dataset
from error_handler import ConfigError, DataError, ErrorHandler
from evaluation.chase_eval import eval_chase, mean_distance_curve
from evaluation.generalization import eval_layout_generalization
from evaluation.goal_reaching import eval_goal_reaching, make_trials, merge_reports
from evaluation.metrics import emit_metrics, read_metrics
from evaluation.stats import format_significance, welch_t_test
from evaluation.timing import timing_benchmark, timing_reports
from models.maze_layout import MazeLayout
from planning.controllers import PLDMController, RandomController, ZeroController
from planning.mpc import PLANNER_TRACE, PlannerTrace
from pldm.model import PLDMModel
from pldm.trainer import Trainer

logger = logging.getLogger(__name__)

DATASET_FILE = "dataset.pldm"
_EVAL_TRIAL_STREAM = 7


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pldm", description="Planning with a latent dynamics model")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--preset", help="Named hyperparameter preset")
    common.add_argument("--seed", type=int, help="Global seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--deterministic", action="store_true", default=None, help="Single-worker, bit-reproducible run")
    common.add_argument("--workers", type=int, help="Worker processes")
    common.add_argument("--verbose-planner", action="store_true", help="Stream planner diagnostics to planner_trace.jsonl")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Override a dotted config key (JSON value)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="Generate an offline dataset")
    train = sub.add_parser("train", parents=[common], help="Train a PLDM world model")
    train.add_argument("--dataset", help="Dataset file")
    train.add_argument("--resume", help="Checkpoint to resume from")
    evaluate = sub.add_parser("eval", parents=[common], help="Goal-reaching, generalization or timing evaluation")
    evaluate.add_argument("--checkpoint", help="Model checkpoint")
    chase = sub.add_parser("chase", parents=[common], help="Chase task evaluation")
    chase.add_argument("--checkpoint", help="Model checkpoint")
    stats = sub.add_parser("stats", parents=[common], help="Welch significance table over metric summaries")
    stats.add_argument("metrics", nargs="*", help="Metric summary files; the first is compared against the rest")
    return parser


def _parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(args: argparse.Namespace) -> ConfigManager:
    """Resolve the configuration, with CLI flags taking precedence."""
    overrides: Dict[str, Any] = dict(_parse_override(item) for item in args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.deterministic:
        overrides["deterministic"] = True
    for flag, key in (("dataset", "paths.dataset"), ("checkpoint", "paths.checkpoint")):
        if getattr(args, flag, None):
            overrides[key] = getattr(args, flag)
    if getattr(args, "metrics", None):
        overrides["paths.metrics"] = list(args.metrics)
    config = ConfigManager(args.config, preset=args.preset, overrides=overrides)
    if config.get("deterministic") and config.get("workers") != 1:
        logger.info("Deterministic mode: using a single worker")
        config.set("workers", 1)
    return config


def _require_path(config: ConfigManager, key: str) -> str:
    path = config.get(key)
    if not path:
        raise ConfigError(f"{key}: no file given")
    if not os.path.exists(path):
        raise DataError(f"{path}: file not found")
    return path


def _open_trace(config: ConfigManager, args) -> Optional[PlannerTrace]:
    if not args.verbose_planner:
        return None
    return PlannerTrace(os.path.join(config.get("output_dir"), PLANNER_TRACE))


def cmd_gen_data(config: ConfigManager, args) -> Dict[str, Any]:
    spec = config.dataset_spec()
    dataset = generate_dataset(spec, workers=config.get("workers"))
    path = os.path.join(config.get("output_dir"), DATASET_FILE)
    digest = save_dataset(dataset, path)
    return {"dataset": path, "checksum": digest, "stats": dataset.metadata["stats"]}


def cmd_train(config: ConfigManager, args) -> Dict[str, Any]:
    dataset = load_dataset(_require_path(config, "paths.dataset"))
    output_dir = config.get("output_dir")
    if args.resume:
        trainer = Trainer.resume(args.resume, dataset, output_dir=output_dir)
    else:
        model = PLDMModel(config.model_config(), seed=config.get("seed"))
        trainer = Trainer(
            model,
            dataset,
            config.train_config(),
            config.loss_weights(),
            output_dir=output_dir,
            seed=config.get("seed"),
        )
    result = trainer.fit()
    return {"checkpoint": result.checkpoint, "steps": result.steps, "epoch_losses": result.epoch_losses}


def _layouts_of(metadata: Dict[str, Any]) -> List[MazeLayout]:
    return [MazeLayout(code) for code in metadata.get("dataset_layouts", [])]


def cmd_eval(config: ConfigManager, args) -> Dict[str, Any]:
    model, metadata, _ = PLDMModel.load(_require_path(config, "paths.checkpoint"))
    plan = config.plan_config()
    eval_cfg = config.eval_config()
    seed = config.get("seed")
    workers = config.get("workers")
    output_dir = config.get("output_dir")
    radius = eval_cfg.success_radius or None
    trace = _open_trace(config, args)
    try:
        if eval_cfg.mode in ("held_out_count", "dmin_buckets"):
            train_layouts = _layouts_of(metadata)
            if not train_layouts:
                raise DataError("Checkpoint does not record the training layouts needed for generalization")
            per_seed = [
                eval_layout_generalization(
                    PLDMController(model, plan, trace), train_layouts, eval_cfg.mode, eval_cfg, seed + s, s, workers
                )
                for s in range(eval_cfg.num_seeds)
            ]
            reports = [merge_reports(group[0].experiment, list(group)) for group in zip(*per_seed)]
            experiment = eval_cfg.mode
        elif eval_cfg.mode == "timing":
            env = config.environment(next(iter(_layouts_of(metadata)), None))
            trials = make_trials(env, eval_cfg.timing_episodes, np.random.default_rng([seed, _EVAL_TRIAL_STREAM]), eval_cfg.max_steps, radius)
            rows = timing_benchmark(model, plan, trials, eval_cfg.replan_intervals, seed)
            reports = timing_reports(rows)
            experiment = "timing"
        else:
            env = config.environment(next(iter(_layouts_of(metadata)), None))
            per_seed = []
            for s in range(eval_cfg.num_seeds):
                rng = np.random.default_rng([seed, _EVAL_TRIAL_STREAM, s])
                trials = make_trials(env, eval_cfg.num_trials, rng, eval_cfg.max_steps, radius)
                per_seed.append(
                    eval_goal_reaching(PLDMController(model, plan, trace), trials, seed + s, s, "goal_reaching", workers)
                )
            reports = [merge_reports("goal_reaching", per_seed)]
            experiment = "goal_reaching"
    finally:
        if trace is not None:
            trace.close()

    csv_path, summary_path = emit_metrics(reports, output_dir, experiment)
    print(summary_table(reports))
    return {"metrics": csv_path, "summary": summary_path}


def cmd_chase(config: ConfigManager, args) -> Dict[str, Any]:
    model, _, _ = PLDMModel.load(_require_path(config, "paths.checkpoint"))
    plan = config.plan_config()
    plan.objective_sign = "avoid"
    trace = _open_trace(config, args)
    try:
        controllers = {
            "Zero": ZeroController(),
            "Random": RandomController(),
            "PLDM": PLDMController(model, plan, trace),
        }
        reports = eval_chase(controllers, config.geometry(), config.chase_config(), config.get("seed"))
    finally:
        if trace is not None:
            trace.close()
    for report in reports:
        report.keys["mean_final_distance"] = float(mean_distance_curve(report)[-1])
    csv_path, summary_path = emit_metrics(reports, config.get("output_dir"), "chase")
    print(summary_table(reports))
    return {"metrics": csv_path, "summary": summary_path}


def _samples(report) -> List[float]:
    if len(report.seed_rates) >= 2:
        return list(report.seed_rates)
    return [float(r.success) for r in report.records]


def cmd_stats(config: ConfigManager, args) -> Dict[str, Any]:
    paths = config.get("paths.metrics") or []
    if len(paths) < 2:
        raise ConfigError("paths.metrics: stats needs a reference summary and at least one other")
    reference = {r.experiment: r for r in read_metrics(paths[0])}
    rows = []
    for other_path in paths[1:]:
        for other in read_metrics(other_path):
            mine = reference.get(other.experiment)
            if mine is None:
                logger.warning(f"{other_path}: group {other.experiment!r} has no counterpart in {paths[0]}")
                continue
            result = welch_t_test(_samples(mine), _samples(other))
            rows.append(
                {
                    "group": other.experiment,
                    "reference": paths[0],
                    "baseline": other_path,
                    "t": result.t,
                    "p": result.p,
                    "dof": result.dof,
                    "significant": format_significance(result.p),
                }
            )
    output_dir = config.get("output_dir")
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "significance.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rows, f, indent=2, sort_keys=True)
        f.write("\n")
    for row in rows:
        print(f"{row['group']:<32} {os.path.basename(row['baseline']):<32} {row['significant']}")
    return {"significance": path, "rows": len(rows)}


def summary_table(reports) -> str:
    lines = [f"{'group':<32} {'success':>8} {'± s.e.':>8}"]
    for report in reports:
        lines.append(f"{report.experiment:<32} {report.success_rate:>8.3f} {report.std_error:>8.3f}")
    return "\n".join(lines)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "chase": cmd_chase,
    "stats": cmd_stats,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the PLDM toolchain; returns the process exit code."""
    configure_logging(os.environ.get("PLDM_LOG_LEVEL", "INFO"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        configure_logging(config.get("log_level"))
        logger.info(f"Running {args.command} with seed {config.get('seed')}")
        config.write_run_files(config.get("output_dir"), args.command)
        result = COMMANDS[args.command](config, args)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return ErrorHandler.INTERNAL_ERROR
    except Exception as e:
        error = ErrorHandler.handle_exception(e, args.command)
        print(json.dumps(ErrorHandler.create_error_response(error["code"], error["message"], error["data"])), file=sys.stderr)
        return error["code"]
    print(json.dumps(ErrorHandler.create_success_response(result), default=str))
    return ErrorHandler.SUCCESS


if __name__ == "__main__":
    sys.exit(main())
