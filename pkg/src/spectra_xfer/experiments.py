"""Experiment runners behind the CLI: datasets, runs, reports, caching.

Every command resolves its datasets through the content-addressed cache,
trains through cached runs (rerunning a command with the same config and an
intact cache does no training), and writes CSV reports whose first line is
a '#' JSON header carrying the artifact version, the config hash and every
dataset hash. SVG companions are emitted next to the CSVs.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cache, svgplot
from .dataset import (
    LabeledDataset,
    TaskSpec,
    generate_dataset,
    load_dataset,
    save_dataset,
    structure_spectrum,
)
from .errors import ConfigError
from .metrics import relative_reduction
from .multitask import build_multitask, evaluate_multitask, train_multitask
from .neuralnet import (
    DEFAULT_DIMS,
    N_HIDDEN,
    TrainConfig,
    default_activations,
    evaluate,
    init_network,
    load_model,
    output_activation_for,
    predict,
    save_model,
    train,
)
from .transfer import (
    DEFAULT_SEED_COUNT,
    SEED_STRIDE,
    TransferPlan,
    cached_run,
    direct_errors,
    grid_search_transfer,
    load_or_train_base,
    run_transfer_experiment,
)

ARTIFACT_VERSION = "spectra-xfer/0.1.0"

DEFAULT_L2_GRID = (1e-7, 1e-6, 1e-5)
DEFAULT_L1_GRID = (1e-8, 1e-7, 1e-6)
DEFAULT_KEEP_PROBS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
DEFAULT_SWEEP_SIZES = (100, 250, 500, 1000, 2000, 5000, 20000)


def default_train_config(n_train: int, seed: int = 0, **overrides) -> TrainConfig:
    """Budget that scales with the train split: large sources need fewer passes."""
    if n_train >= 4000:
        base = {"epochs": 100, "batch_size": 100, "patience": 15}
    elif n_train >= 800:
        base = {"epochs": 200, "batch_size": 32, "patience": 30}
    else:
        base = {"epochs": 350, "batch_size": 32, "patience": 50}
    base.update(overrides)
    return TrainConfig(seed=seed, **base)


def task_spec_from_config(cfg: dict) -> TaskSpec:
    from .spectrum import WavelengthGrid

    kwargs = {"kind": cfg["kind"], "layer_count": int(cfg["layers"])}
    if "thickness_range" in cfg:
        kwargs["thickness_range"] = tuple(cfg["thickness_range"])
    if "grid" in cfg:
        kwargs["grid"] = WavelengthGrid.from_dict(cfg["grid"])
    if "materials" in cfg:
        kwargs["materials"] = tuple(cfg["materials"])
    if "mask_width" in cfg:
        kwargs["mask_width"] = int(cfg["mask_width"])
    return TaskSpec(**kwargs)


@dataclass
class DatasetHandle:
    dataset: LabeledDataset
    content_hash: str
    path: Path

    @property
    def n_train(self) -> int:
        return len(self.dataset.indices("train"))


def ensure_dataset(cfg: dict, cache_dir=None) -> DatasetHandle:
    """Load the dataset for a config, generating and caching it if needed."""
    if "path" in cfg:
        ds = load_dataset(cfg["path"])
        return DatasetHandle(ds, ds.content_hash(), Path(cfg["path"]))
    spec = task_spec_from_config(cfg)
    size = int(cfg["size"])
    seed = int(cfg["seed"])
    key = cache.content_key(
        {"kind": "dataset", "spec": spec.to_dict(), "size": size, "seed": seed}
    )
    path = cache.entry_path(cache_dir, "datasets", key, suffix=".csv")
    if path.exists():
        ds = load_dataset(path)
    else:
        ds = generate_dataset(spec, size, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, path)
    return DatasetHandle(ds, ds.content_hash(), path)


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_report_csv(path, meta: dict, columns, rows) -> None:
    header = dict(meta)
    header["artifact"] = ARTIFACT_VERSION
    lines = ["# " + cache.canonical_json(header), ",".join(columns)]
    lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
    cache.atomic_write_text(path, "\n".join(lines) + "\n")


def parallel_map(fn, items, jobs: int = 1):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _resolved_train_config(handle: DatasetHandle, seed: int, overrides: dict | None) -> TrainConfig:
    return default_train_config(handle.n_train, seed=seed, **(overrides or {}))


def _dims(network_cfg: dict | None, mask_width: int, n_points: int):
    width = int((network_cfg or {}).get("hidden_width", DEFAULT_DIMS[1]))
    return (mask_width,) + (width,) * N_HIDDEN + (n_points,)


def _hidden_width(network_cfg: dict | None):
    if network_cfg and "hidden_width" in network_cfg:
        return int(network_cfg["hidden_width"])
    return None


# ---------------------------------------------------------------------------
# commands


def cmd_gen_data(config: dict, out_dir, cache_dir=None) -> dict:
    handle = ensure_dataset(config["dataset"], cache_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = handle.dataset.spec
    out_path = Path(config.get("out") or out_dir / (
        f"{spec.task_id}_n{len(handle.dataset)}_s{handle.dataset.seed}.csv"
    ))
    if out_path.resolve() != handle.path.resolve():
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_bytes(handle.path.read_bytes())
    print(f"dataset {out_path} sha256 {handle.content_hash}")
    return {"path": str(out_path), "hash": handle.content_hash}


def cmd_train_direct(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    handle = ensure_dataset(config["dataset"], cache_dir)
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    train_cfg = _resolved_train_config(handle, seed, config.get("train"))
    width = _hidden_width(config.get("network"))

    # the first-seed training doubles as the emitted checkpoint; caching it
    # (and its run entry) keeps a rerun of this command training-free
    _, base_key = load_or_train_base(handle.dataset, train_cfg, cache_dir, width)
    errors = direct_errors(handle.dataset, train_cfg, seeds, cache_dir, width)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / f"direct_{handle.dataset.spec.task_id}_seed{seed}.model.json"
    ckpt_path.write_bytes(cache.entry_path(cache_dir, "basenets", base_key).read_bytes())

    meta = {
        "command": "train",
        "config_hash": cache.content_key(config),
        "datasets": {"target": handle.content_hash},
        "train_config": train_cfg.to_dict(),
    }
    rows = [[
        handle.dataset.spec.task_id, len(handle.dataset), seeds,
        float(np.mean(errors)), float(np.std(errors)),
    ] + [float(e) for e in errors]]
    columns = ["task", "size", "seeds", "mean_error", "std_error"] + [
        f"seed_{seed + k * SEED_STRIDE}" for k in range(seeds)
    ]
    report = out_dir / "direct_report.csv"
    write_report_csv(report, meta, columns, rows)
    return {
        "report": str(report),
        "checkpoint": str(ckpt_path),
        "mean_error": float(np.mean(errors)),
        "errors": [float(e) for e in errors],
    }


def _transfer_line_svg(results, direct_mean: float) -> str:
    xs = [r.plan.n2 if not r.plan.is_empty else 0 for r in results]
    return svgplot.line_chart(
        [
            ("direct baseline", xs, [direct_mean] * len(xs)),
            ("transfer", xs, [r.transfer_mean for r in results]),
        ],
        title="test error vs transferred layer range",
        x_label="last transferred hidden layer",
        y_label="spectrum error",
        y_min=0.0,
    )


def cmd_transfer(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    source = ensure_dataset(config["source"], cache_dir)
    target = ensure_dataset(config["target"], cache_dir)
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    target_cfg = _resolved_train_config(target, seed, config.get("train"))
    source_cfg = _resolved_train_config(source, seed, config.get("source_train"))
    width = _hidden_width(config.get("network"))

    if "plans" in config:
        plans = [TransferPlan(int(a), int(b)) for a, b in config["plans"]]
    else:
        plans = [TransferPlan.first_n(n) for n in config.get("first_n", range(1, N_HIDDEN + 1))]

    def run_plan(plan):
        return run_transfer_experiment(
            source.dataset, target.dataset, plan, target_cfg,
            source_config=source_cfg, seeds=seeds, cache_dir=cache_dir,
            hidden_width=width,
        )

    results = parallel_map(run_plan, plans, jobs)
    direct_mean = results[0].direct_mean if results else float("nan")

    meta = {
        "command": "transfer",
        "config_hash": cache.content_key(config),
        "datasets": {"source": source.content_hash, "target": target.content_hash},
        "train_config": target_cfg.to_dict(),
        "source_train_config": source_cfg.to_dict(),
        "seeds": seeds,
    }
    columns = [
        "n1", "n2", "direct_mean", "direct_std", "transfer_mean", "transfer_std",
        "relative_reduction", "negative_transfer",
    ]
    rows = [
        [r.plan.n1, r.plan.n2, r.direct_mean, r.direct_std, r.transfer_mean,
         r.transfer_std, r.reduction, r.negative_transfer]
        for r in results
    ]
    out_dir = Path(out_dir)
    report = out_dir / "transfer_report.csv"
    write_report_csv(report, meta, columns, rows)
    cache.atomic_write_text(out_dir / "transfer_report.svg",
                            _transfer_line_svg(results, direct_mean))
    return {"report": str(report), "results": results}


def _grid_svg(cells, direct_mean: float) -> str:
    values = [[None] * N_HIDDEN for _ in range(N_HIDDEN)]
    text = [[""] * N_HIDDEN for _ in range(N_HIDDEN)]
    for cell in cells:
        i, j = cell.n1 - 1, cell.n2 - 1
        if cell.status == "ok":
            values[i][j] = cell.mean
            flag = "*" if cell.negative_transfer else ""
            text[i][j] = f"{cell.mean * 100:.1f}%{flag}"
        else:
            text[i][j] = "failed"
    return svgplot.heatmap(
        values,
        row_labels=[f"n1={i}" for i in range(1, N_HIDDEN + 1)],
        col_labels=[f"n2={j}" for j in range(1, N_HIDDEN + 1)],
        title=f"transfer test error (direct {direct_mean * 100:.1f}%, * = negative transfer)",
        cell_text=text,
    )


def cmd_grid_search(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    source = ensure_dataset(config["source"], cache_dir)
    target = ensure_dataset(config["target"], cache_dir)
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    target_cfg = _resolved_train_config(target, seed, config.get("train"))
    source_cfg = _resolved_train_config(source, seed, config.get("source_train"))
    width = _hidden_width(config.get("network"))

    base, base_key = load_or_train_base(source.dataset, source_cfg, cache_dir, width)
    if jobs <= 1:
        cells, direct = grid_search_transfer(
            base, base_key, target.dataset, target_cfg, seeds, cache_dir
        )
    else:
        # same cell/seed protocol, but cells dispatched over a thread pool
        from .transfer import GridCell, _transfer_errors, all_grid_plans

        direct = direct_errors(target.dataset, target_cfg, seeds, cache_dir)
        direct_mean_early = float(np.mean(direct))

        def run_cell(item):
            cell_index, plan = item
            cell = GridCell(n1=plan.n1, n2=plan.n2)
            try:
                errors = _transfer_errors(
                    base, base_key, target.dataset, plan, target_cfg, seeds,
                    cell_index + 1, cache_dir,
                )
                cell.errors = errors
                cell.mean = float(np.mean(errors))
                cell.std = float(np.std(errors))
                cell.reduction = relative_reduction(direct_mean_early, cell.mean)
                cell.negative_transfer = cell.mean > direct_mean_early
            except Exception as exc:
                cell.status = "failed"
                cell.message = f"{type(exc).__name__}: {exc}"
            return cell

        cells = parallel_map(run_cell, list(enumerate(all_grid_plans())), jobs)

    direct_mean = float(np.mean(direct))
    meta = {
        "command": "grid-search",
        "config_hash": cache.content_key(config),
        "datasets": {"source": source.content_hash, "target": target.content_hash},
        "train_config": target_cfg.to_dict(),
        "source_train_config": source_cfg.to_dict(),
        "seeds": seeds,
        "direct_mean": direct_mean,
    }
    columns = ["n1", "n2", "status", "mean_error", "std_error",
               "relative_reduction", "negative_transfer"]
    rows = [
        [c.n1, c.n2, c.status, c.mean, c.std, c.reduction, c.negative_transfer]
        for c in cells
    ]
    out_dir = Path(out_dir)
    report = out_dir / "grid_report.csv"
    write_report_csv(report, meta, columns, rows)
    cache.atomic_write_text(out_dir / "grid_report.svg", _grid_svg(cells, direct_mean))
    status_rows = [[c.n1, c.n2, c.status, c.message] for c in cells]
    write_report_csv(out_dir / "grid_status.csv", meta,
                     ["n1", "n2", "status", "message"], status_rows)
    failed = sum(1 for c in cells if c.status != "ok")
    return {
        "report": str(report),
        "cells": cells,
        "direct_errors": direct,
        "failed_cells": failed,
        "exit_code": 0 if failed == 0 else 3,
    }


def _mt_cached_run(handles: dict, depth: int, cfg: TrainConfig, dims, cache_dir=None) -> dict:
    """One multi-task training run (all tasks together), cached by content."""
    key = cache.content_key(
        {
            "kind": "mt-run",
            "datasets": {t: h.content_hash for t, h in handles.items()},
            "n_shared": depth,
            "dims": list(dims),
            "config": cfg.to_dict(),
        }
    )
    hit = cache.json_get(cache_dir, "runs", key)
    if hit is not None:
        return hit
    tasks = [
        (t, output_activation_for(handles[t].dataset.spec.kind)) for t in handles
    ]
    model = build_multitask(depth, tasks, seed=cfg.seed, dims=dims)
    trained, history = train_multitask(
        model, {t: h.dataset for t, h in handles.items()}, cfg
    )
    result = {
        "errors": {t: evaluate_multitask(trained, t, handles[t].dataset) for t in handles},
        "best_epoch": history.best_epoch,
    }
    cache.json_put(cache_dir, "runs", key, result)
    return result


def cmd_multitask(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    handles = {}
    for task_cfg in config["tasks"]:
        handle = ensure_dataset(task_cfg, cache_dir)
        handles[handle.dataset.spec.task_id] = handle
    task_ids = list(handles)
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    sweep_seeds = int(config.get("sweep_seeds", 1))
    sweep_depths = [int(d) for d in config.get("shared_depths", range(1, N_HIDDEN))]
    n_train = max(h.n_train for h in handles.values())
    train_cfg = default_train_config(n_train, seed=seed, **(config.get("train") or {}))
    some = next(iter(handles.values())).dataset.spec
    dims = _dims(config.get("network"), some.mask_width, some.grid.n_points)
    width = _hidden_width(config.get("network"))

    def mt_means(depth: int, n_seeds: int) -> dict:
        per_task = {t: [] for t in task_ids}
        for k in range(n_seeds):
            cfg = TrainConfig(**{**train_cfg.to_dict(), "seed": seed + k * SEED_STRIDE})
            result = _mt_cached_run(handles, depth, cfg, dims, cache_dir)
            for t in task_ids:
                per_task[t].append(result["errors"][t])
        return {t: float(np.mean(v)) for t, v in per_task.items()}

    # shared-depth sweep (cheap seeds) to locate each task's best depth
    sweep = {depth: mt_means(depth, sweep_seeds) for depth in sweep_depths}
    best_by_sweep = {
        t: min(sweep_depths, key=lambda d: sweep[d][t]) for t in task_ids
    }

    # full-seed runs at the sweep winners plus any configured extra depths
    final_depths = sorted(
        set(best_by_sweep.values()) | {int(d) for d in config.get("final_depths", [])}
    )
    final = {depth: mt_means(depth, seeds) for depth in final_depths}
    best_depth = {t: min(final_depths, key=lambda d: final[d][t]) for t in task_ids}

    # direct baselines with the same data and training config
    direct = {}
    for t in task_ids:
        errors = direct_errors(handles[t].dataset, train_cfg, seeds, cache_dir, width)
        direct[t] = (float(np.mean(errors)), float(np.std(errors)))

    meta = {
        "command": "multitask",
        "config_hash": cache.content_key(config),
        "datasets": {t: handles[t].content_hash for t in task_ids},
        "train_config": train_cfg.to_dict(),
        "seeds": seeds,
        "sweep_seeds": sweep_seeds,
    }
    out_dir = Path(out_dir)
    sweep_rows = [
        [depth] + [sweep[depth][t] for t in task_ids] for depth in sweep_depths
    ]
    write_report_csv(out_dir / "multitask_sweep.csv", meta,
                     ["n_shared"] + task_ids, sweep_rows)
    table_rows = []
    for t in task_ids:
        mt_err = final[best_depth[t]][t]
        table_rows.append([
            t, direct[t][0], direct[t][1], mt_err, best_depth[t],
            relative_reduction(direct[t][0], mt_err),
        ])
    table = out_dir / "multitask_report.csv"
    write_report_csv(table, meta,
                     ["task", "direct_mean", "direct_std", "multitask_error",
                      "best_shared_depth", "relative_reduction"],
                     table_rows)
    return {
        "report": str(table),
        "sweep": sweep,
        "final": final,
        "direct": direct,
        "best_depth": best_depth,
    }


def cmd_ablate_reg(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    source = ensure_dataset(config["source"], cache_dir)
    target = ensure_dataset(config["target"], cache_dir)
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    dropout_seeds = int(config.get("dropout_seeds", seeds))
    l2_grid = [float(v) for v in config.get("l2_grid", DEFAULT_L2_GRID)]
    l1_grid = [float(v) for v in config.get("l1_grid", DEFAULT_L1_GRID)]
    keep_probs = [float(v) for v in config.get("keep_probs", DEFAULT_KEEP_PROBS)]
    width = _hidden_width(config.get("network"))
    source_cfg = _resolved_train_config(source, seed, config.get("source_train"))
    plan = TransferPlan(1, N_HIDDEN)

    def paired(reg_type: str, value: float, n_seeds: int):
        overrides = dict(config.get("train") or {})
        if reg_type == "l2":
            overrides["l2_lambda"] = value
        elif reg_type == "l1":
            overrides["l1_lambda"] = value
        else:
            overrides["keep_prob"] = value
        cfg = _resolved_train_config(target, seed, overrides)
        result = run_transfer_experiment(
            source.dataset, target.dataset, plan, cfg,
            source_config=source_cfg, seeds=n_seeds, cache_dir=cache_dir,
            hidden_width=width,
        )
        return result

    rows = []
    settings = (
        [("l2", v, seeds) for v in l2_grid]
        + [("l1", v, seeds) for v in l1_grid]
        + [("dropout", v, dropout_seeds) for v in keep_probs]
    )
    results = parallel_map(lambda s: paired(*s), settings, jobs)
    curves = {"l2": [], "l1": [], "dropout": []}
    for (reg_type, value, n_seeds), res in zip(settings, results):
        rows.append(["direct", reg_type, value, res.direct_mean, res.direct_std, n_seeds])
        rows.append(["transfer", reg_type, value, res.transfer_mean, res.transfer_std, n_seeds])
        curves[reg_type].append((value, res.direct_mean, res.transfer_mean))

    meta = {
        "command": "ablate-reg",
        "config_hash": cache.content_key(config),
        "datasets": {"source": source.content_hash, "target": target.content_hash},
        "seeds": seeds,
        "dropout_seeds": dropout_seeds,
    }
    out_dir = Path(out_dir)
    report = out_dir / "regularization_report.csv"
    write_report_csv(report, meta,
                     ["method", "reg_type", "reg_value", "mean_error", "std_error", "seeds"],
                     rows)
    for reg_type, points in curves.items():
        if not points:
            continue
        points.sort(key=lambda p: p[0])
        xs = [p[0] for p in points]
        svg = svgplot.line_chart(
            [("direct", xs, [p[1] for p in points]),
             ("transfer", xs, [p[2] for p in points])],
            title=f"{reg_type} regularization: direct vs transfer",
            x_label={"l2": "l2 weight penalty", "l1": "l1 weight penalty",
                     "dropout": "keep_prob"}[reg_type],
            y_label="spectrum error",
            y_min=0.0,
        )
        cache.atomic_write_text(out_dir / f"regularization_{reg_type}.svg", svg)
    return {"report": str(report), "rows": rows, "curves": curves}


def cmd_sweep_datasize(config: dict, out_dir, cache_dir=None, jobs: int = 1) -> dict:
    task_cfg = dict(config["task"])
    sizes = [int(s) for s in config.get("sizes", DEFAULT_SWEEP_SIZES)]
    seed = int(config.get("seed", 0))
    seeds = int(config.get("seeds", DEFAULT_SEED_COUNT))
    width = _hidden_width(config.get("network"))

    stats = []
    hashes = {}
    for size in sizes:
        cfg = dict(task_cfg)
        cfg["size"] = size
        handle = ensure_dataset(cfg, cache_dir)
        hashes[str(size)] = handle.content_hash
        train_cfg = _resolved_train_config(handle, seed, config.get("train"))
        errors = direct_errors(handle.dataset, train_cfg, seeds, cache_dir, width)
        stats.append((size, float(np.mean(errors)), float(np.std(errors))))

    # non-increasing check with one-standard-deviation slack
    monotone = all(
        stats[i + 1][1] <= stats[i][1] + stats[i][2] for i in range(len(stats) - 1)
    )
    meta = {
        "command": "sweep-datasize",
        "config_hash": cache.content_key(config),
        "datasets": hashes,
        "seeds": seeds,
        "monotone_within_1std": monotone,
    }
    out_dir = Path(out_dir)
    report = out_dir / "datasize_report.csv"
    write_report_csv(report, meta, ["size", "mean_error", "std_error"],
                     [[s, m, d] for s, m, d in stats])
    svg = svgplot.line_chart(
        [("direct learning", [s for s, _, _ in stats], [m for _, m, _ in stats])],
        title="test error vs training-set size",
        x_label="dataset size", y_label="spectrum error", y_min=0.0,
    )
    cache.atomic_write_text(out_dir / "datasize_report.svg", svg)
    return {"report": str(report), "stats": stats, "monotone": monotone}


def cmd_predict(checkpoint, thicknesses, out_dir, overlay: bool = False) -> dict:
    model = load_model(checkpoint)
    task_dict = model.provenance.get("task")
    spec = TaskSpec.from_dict(task_dict) if isinstance(task_dict, dict) else None
    from .dataset import mask_input

    thicknesses = [float(t) for t in thicknesses]
    if spec is not None:
        features = mask_input(thicknesses, spec.mask_width)
        grid = spec.grid
    else:
        features = mask_input(thicknesses, model.layers[0].fan_in)
        from .spectrum import DEFAULT_GRID

        grid = DEFAULT_GRID
    predicted = predict(model, features)
    wavelengths = grid.wavelengths()

    columns = ["wavelength_nm", "predicted"]
    data = [wavelengths, predicted]
    exact = None
    if overlay:
        if spec is None:
            raise ConfigError("checkpoint carries no task provenance; cannot overlay")
        exact = structure_spectrum(spec, thicknesses)
        columns.append("exact")
        data.append(exact)
    meta = {
        "command": "predict",
        "checkpoint": str(checkpoint),
        "thicknesses": thicknesses,
    }
    out_dir = Path(out_dir)
    report = out_dir / "predicted_spectrum.csv"
    rows = [[float(col[i]) for col in data] for i in range(len(wavelengths))]
    write_report_csv(report, meta, columns, rows)
    if overlay:
        svg = svgplot.line_chart(
            [("exact", wavelengths.tolist(), exact.tolist()),
             ("predicted", wavelengths.tolist(), predicted.tolist())],
            title="predicted vs exact spectrum",
            x_label="wavelength (nm)", y_label="response", y_min=0.0,
        )
        cache.atomic_write_text(out_dir / "predicted_spectrum.svg", svg)
    return {"report": str(report)}


def cmd_report(out_dir) -> dict:
    """Summarize every report CSV in a directory."""
    out_dir = Path(out_dir)
    summaries = []
    for path in sorted(out_dir.glob("*.csv")):
        lines = path.read_text().splitlines()
        if not lines or not lines[0].startswith("#"):
            continue
        head = json.loads(lines[0][1:])
        summaries.append({
            "file": path.name,
            "command": head.get("command", "?"),
            "config_hash": head.get("config_hash", "")[:12],
            "rows": max(len(lines) - 2, 0),
        })
        print(f"{path.name}: command={head.get('command', '?')} rows={max(len(lines) - 2, 0)} "
              f"config={head.get('config_hash', '')[:12]}")
    if not summaries:
        print(f"no reports found under {out_dir}")
    return {"reports": summaries}
