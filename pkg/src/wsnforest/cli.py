"""Command-line entry point: simulate, train, diagnose, experiment.

Exit codes: 0 success, 2 configuration error, 3 malformed input data,
4 artifact mismatch (forest files), 5 filesystem I/O failure.  Every run
echoes its fully resolved configuration to stderr so any output can be
reproduced from the log alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources

from .errors import ArtifactError, ConfigurationError, DataFormatError
from .experiments import (
    DEFAULT_EVAL_RUNS,
    run_monitoring_experiments,
    run_trees_experiment,
    write_report_files,
)
from .forest import (
    filter_weak_trees,
    forest_diagnose,
    load_forest,
    save_forest,
    train_forest,
)
from .levels import ThresholdTable, frame_features, label_frames
from .pipeline import PipelineConfig
from .simulation import SimulationConfig, read_frames_csv, simulate_many, write_frames_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ARTIFACT = 4
EXIT_IO = 5

_FIGURE_CONFIGS = {
    "delay": "set1_default.json",
    "error": "set1_default.json",
    "trees": "set2_recalibrated.json",
}


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return data


def load_packaged_config(name: str) -> dict:
    text = resources.files("wsnforest.configs").joinpath(name).read_text("utf-8")
    return json.loads(text)


def _echo_config(config: PipelineConfig, extras: dict | None = None) -> None:
    resolved = config.to_dict()
    if extras:
        resolved.update(extras)
    print(f"resolved config: {json.dumps(resolved, sort_keys=True)}", file=sys.stderr)


def _require_seed(flag_seed, config_data: dict) -> int:
    if flag_seed is not None:
        return flag_seed
    seed = config_data.get("simulation", {}).get("seed")
    if seed is None:
        raise ConfigurationError(
            "a seed is required (pass --seed or set simulation.seed in the "
            "config file); wall-clock seeding is not supported")
    return seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsnforest",
        description="Simulate a sensor fleet on a degrading device and "
                    "diagnose its failure level with a random forest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate observation frames as CSV")
    p_sim.add_argument("--set", type=int, choices=(1, 2), default=None,
                       dest="experiment_set")
    p_sim.add_argument("--steps", type=int, default=None)
    p_sim.add_argument("--runs", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--breakdown-prob", type=float, default=None)
    p_sim.add_argument("--failure-denominator", type=float, default=None)
    p_sim.add_argument("--config", default=None, help="JSON config file")
    p_sim.add_argument("--out", required=True, help="output frames CSV path")

    p_train = sub.add_parser("train", help="train a forest from a frames CSV")
    p_train.add_argument("--in", dest="frames_in", required=True)
    p_train.add_argument("--trees", type=int, default=None)
    p_train.add_argument("--impurity", choices=("entropy", "gini"), default=None)
    p_train.add_argument("--fraction", type=float, default=None)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--filter-weak", action=argparse.BooleanOptionalAction,
                         default=True)
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--out", required=True, help="output forest JSON path")

    p_diag = sub.add_parser("diagnose", help="diagnose frames with a saved forest")
    p_diag.add_argument("--forest", required=True)
    p_diag.add_argument("--frames", required=True)
    p_diag.add_argument("--config", default=None)

    p_exp = sub.add_parser("experiment", help="run a figure-reproduction experiment")
    p_exp.add_argument("--figure", choices=("delay", "error", "trees"), required=True)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--eval-runs", type=int, default=DEFAULT_EVAL_RUNS)
    p_exp.add_argument("--config", default=None)
    p_exp.add_argument("--out-dir", required=True)
    return parser


def _pipeline_config(args, default_name: str | None = None) -> PipelineConfig:
    if args.config is not None:
        data = load_config_file(args.config)
    elif default_name is not None:
        data = load_packaged_config(default_name)
    else:
        data = load_packaged_config("set1_default.json")
    seed = _require_seed(getattr(args, "seed", None), data)
    data.setdefault("simulation", {})["seed"] = seed
    return PipelineConfig.from_dict(data)


def _cmd_simulate(args) -> int:
    data = load_config_file(args.config) if args.config else load_packaged_config("set1_default.json")
    sim_data = dict(data.get("simulation", {}))
    overrides = {
        "experiment_set": args.experiment_set,
        "steps": args.steps,
        "runs": args.runs,
        "sensor_breakdown_prob": args.breakdown_prob,
        "failure_rate_denominator": args.failure_denominator,
    }
    for key, value in overrides.items():
        if value is not None:
            sim_data[key] = value
    sim_data["seed"] = _require_seed(args.seed, {"simulation": sim_data})
    config = SimulationConfig.from_dict(sim_data)
    print(f"resolved config: {json.dumps(config.to_dict(), sort_keys=True)}",
          file=sys.stderr)
    runs = simulate_many(config)
    write_frames_csv(args.out, runs)
    print(f"wrote {sum(len(r) for r in runs)} frames "
          f"({config.runs} runs x {config.steps} steps) to {args.out}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _pipeline_config(args)
    overrides = {}
    if args.trees is not None:
        overrides["num_trees"] = args.trees
    if args.impurity is not None:
        overrides["impurity"] = args.impurity
    if args.fraction is not None:
        overrides["sample_fraction"] = args.fraction
    if overrides:
        config = replace(config, **overrides)
    _echo_config(config, {"filter_weak": args.filter_weak})

    runs = read_frames_csv(args.frames_in)
    instances = []
    for frames in runs:
        instances.extend(label_frames(frames, config.thresholds))
    if not instances:
        raise DataFormatError("frames file contains no data rows")
    forest = train_forest(
        instances,
        num_trees=config.num_trees,
        impurity=config.impurity,
        fraction=config.sample_fraction,
        seed=config.simulation.seed,
    )
    if args.filter_weak:
        forest = filter_weak_trees(forest)
    save_forest(forest, args.out)
    print(f"trained {config.num_trees} trees on {len(instances)} instances; "
          f"retained {len(forest.trees)}; wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    # Inference is deterministic: only the threshold table is needed.
    if args.config is not None:
        data = load_config_file(args.config)
    else:
        data = load_packaged_config("set1_default.json")
    thresholds = ThresholdTable.from_dict(
        data.get("thresholds", ThresholdTable.default().to_dict()))
    print(f"resolved config: {json.dumps({'thresholds': thresholds.to_dict()}, sort_keys=True)}",
          file=sys.stderr)
    forest = load_forest(args.forest)
    runs = read_frames_csv(args.frames)
    for frames in runs:
        for frame in frames:
            features = frame_features(frame, thresholds)
            predicted, votes = forest_diagnose(forest, features)
            print(",".join(str(v) for v in (frame.time, predicted, *votes)))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = _pipeline_config(args, _FIGURE_CONFIGS[args.figure])
    _echo_config(config, {"figure": args.figure, "eval_runs": args.eval_runs})
    if args.figure == "trees":
        report = run_trees_experiment(config, eval_runs=args.eval_runs)
    else:
        delay_report, error_report = run_monitoring_experiments(
            config, eval_runs=args.eval_runs)
        report = delay_report if args.figure == "delay" else error_report
    manifest = write_report_files(report, args.out_dir)
    print(f"wrote {', '.join(f['path'] for f in manifest['files'])} and "
          f"manifest.json to {args.out_dir}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "train": _cmd_train,
        "diagnose": _cmd_diagnose,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
