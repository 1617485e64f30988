"""Command-line interface: every experiment as a reproducible command.

Commands read one JSON config document (schema below, unknown keys are
rejected), resolve datasets and trained models through the shared cache,
and write CSV/SVG reports into --out-dir. Rerunning a command with the same
config and an intact cache retrains nothing and reproduces byte-identical
reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, SpectraXferError
from . import experiments

TRAIN_KEYS = {
    "epochs", "batch_size", "learning_rate", "l2_lambda", "l1_lambda",
    "keep_prob", "patience",
}
NETWORK_KEYS = {"hidden_width"}
DATASET_KEYS = {
    "kind", "layers", "size", "seed", "thickness_range", "grid", "materials",
    "mask_width", "path",
}
GRID_KEYS = {"start", "stop", "step"}

COMMAND_KEYS = {
    "gen-data": {"dataset", "out"},
    "train": {"dataset", "train", "network", "seed", "seeds"},
    "transfer": {"source", "target", "plans", "first_n", "train",
                 "source_train", "network", "seed", "seeds"},
    "grid-search": {"source", "target", "train", "source_train", "network",
                    "seed", "seeds"},
    "multitask": {"tasks", "shared_depths", "final_depths", "seeds",
                  "sweep_seeds", "seed", "train", "network"},
    "ablate-reg": {"source", "target", "l2_grid", "l1_grid", "keep_probs",
                   "seeds", "dropout_seeds", "seed", "train", "source_train",
                   "network"},
    "sweep-datasize": {"task", "sizes", "seeds", "seed", "train", "network"},
    "predict": {"checkpoint", "thicknesses", "overlay"},
}


def _check_keys(cfg: dict, allowed: set, where: str) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _check_dataset(cfg: dict, where: str, sized: bool = True) -> None:
    allowed = DATASET_KEYS if sized else DATASET_KEYS - {"path", "size"}
    _check_keys(cfg, allowed, where)
    if "path" in cfg:
        extra = set(cfg) - {"path"}
        if extra:
            raise ConfigError(f"{where}: 'path' excludes other keys, found {sorted(extra)}")
        return
    required = ("kind", "layers", "size", "seed") if sized else ("kind", "layers", "seed")
    for key in required:
        if key not in cfg:
            raise ConfigError(f"{where}: missing required key {key!r}")
    if "grid" in cfg:
        _check_keys(cfg["grid"], GRID_KEYS, f"{where}.grid")


def validate_config(command: str, cfg: dict) -> dict:
    """Schema-check one command's config document; returns it unchanged."""
    if command not in COMMAND_KEYS:
        raise ConfigError(f"unknown command {command!r}")
    _check_keys(cfg, COMMAND_KEYS[command], command)
    for key in ("dataset", "source", "target"):
        if key in cfg:
            _check_dataset(cfg[key], f"{command}.{key}")
    if "task" in cfg:  # sweep task: size comes from the sizes list
        _check_dataset(cfg["task"], f"{command}.task", sized=False)
    if "tasks" in cfg:
        if not isinstance(cfg["tasks"], list) or not cfg["tasks"]:
            raise ConfigError(f"{command}.tasks: expected a non-empty list")
        for i, task in enumerate(cfg["tasks"]):
            _check_dataset(task, f"{command}.tasks[{i}]")
    for key in ("train", "source_train"):
        if key in cfg:
            _check_keys(cfg[key], TRAIN_KEYS, f"{command}.{key}")
    if "network" in cfg:
        _check_keys(cfg["network"], NETWORK_KEYS, f"{command}.network")
    if "plans" in cfg:
        for pair in cfg["plans"]:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigError(f"{command}.plans: entries must be [n1, n2] pairs")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectra-xfer",
        description="Optical-spectrum datasets and transfer/multi-task learning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--seeds", type=int, help="override the seed count")
        p.add_argument("--jobs", type=int, default=1, help="parallel independent runs")
        p.add_argument("--cache-dir", help="cache root (default $SPECTRA_XFER_CACHE)")
        p.add_argument("--out-dir", default="reports", help="report output directory")

    p = sub.add_parser("gen-data", help="generate a dataset CSV and print its hash")
    add_common(p)
    p.add_argument("--kind", choices=("film", "sphere"))
    p.add_argument("--layers", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--out")

    for name, help_text in (
        ("train", "direct learning on one dataset"),
        ("transfer", "layer-range transfer against the direct baseline"),
        ("grid-search", "all 21 (n1, n2) transfer ranges"),
        ("multitask", "shared-trunk multi-task learning and depth sweep"),
        ("ablate-reg", "L2/L1/dropout sweeps for direct and transfer"),
        ("sweep-datasize", "direct-learning error vs dataset size"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_common(p)

    p = sub.add_parser("predict", help="spectrum prediction from a checkpoint")
    add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--thicknesses", help="comma-separated layer thicknesses in nm")
    p.add_argument("--overlay", action="store_true",
                   help="add the analytic spectrum for comparison")

    p = sub.add_parser("report", help="summarize report CSVs in --out-dir")
    add_common(p)
    return parser


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _dispatch(args) -> int:
    command = args.command
    if command == "report":
        experiments.cmd_report(args.out_dir)
        return 0

    cfg = _load_config(args)
    declared = cfg.pop("command", None)
    if declared is not None and declared != command:
        raise ConfigError(
            f"config declares command {declared!r} but {command!r} was invoked"
        )
    if command == "gen-data":
        if args.kind or args.layers or args.size or args.seed is not None:
            ds = dict(cfg.get("dataset", {}))
            if args.kind:
                ds["kind"] = args.kind
            if args.layers is not None:
                ds["layers"] = args.layers
            if args.size is not None:
                ds["size"] = args.size
            if args.seed is not None:
                ds["seed"] = args.seed
            cfg["dataset"] = ds
        if args.out:
            cfg["out"] = args.out
        if "dataset" not in cfg:
            raise ConfigError("gen-data needs --kind/--layers/--size/--seed or a config file")
    else:
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.seeds is not None:
            cfg["seeds"] = args.seeds

    if command == "predict":
        checkpoint = args.checkpoint or cfg.get("checkpoint")
        if args.thicknesses:
            cfg["thicknesses"] = [float(t) for t in args.thicknesses.split(",")]
        if args.overlay:
            cfg["overlay"] = True
        cfg["checkpoint"] = checkpoint
        validate_config(command, cfg)
        if not checkpoint or "thicknesses" not in cfg:
            raise ConfigError("predict needs --checkpoint and --thicknesses")
        experiments.cmd_predict(checkpoint, cfg["thicknesses"], args.out_dir,
                                overlay=bool(cfg.get("overlay", False)))
        return 0

    validate_config(command, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = {
        "gen-data": lambda: experiments.cmd_gen_data(cfg, out_dir, args.cache_dir),
        "train": lambda: experiments.cmd_train_direct(cfg, out_dir, args.cache_dir, args.jobs),
        "transfer": lambda: experiments.cmd_transfer(cfg, out_dir, args.cache_dir, args.jobs),
        "grid-search": lambda: experiments.cmd_grid_search(cfg, out_dir, args.cache_dir, args.jobs),
        "multitask": lambda: experiments.cmd_multitask(cfg, out_dir, args.cache_dir, args.jobs),
        "ablate-reg": lambda: experiments.cmd_ablate_reg(cfg, out_dir, args.cache_dir, args.jobs),
        "sweep-datasize": lambda: experiments.cmd_sweep_datasize(cfg, out_dir, args.cache_dir, args.jobs),
    }[command]
    result = runner()
    return int(result.get("exit_code", 0)) if isinstance(result, dict) else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SpectraXferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
