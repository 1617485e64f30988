"""Layer-range weight transfer, fine-tuning, and the (n1, n2) grid search.

A trained source network ("base net") donates hidden layers n1..n2 as the
initialization of a target network; every other layer is freshly drawn from
the run seed, after which the whole network is fine-tuned on the small
target dataset. Direct learning (fresh initialization, same data, same
config) is the baseline every transfer run is compared against; a transfer
run whose error exceeds the baseline is flagged as negative transfer.

Source-network training is cached on disk keyed by (architecture
fingerprint, dataset hash, training config), so each large source task is
trained once. Reported errors are mean +- std over a configurable number of
seeds (default 5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cache
from .dataset import LabeledDataset
from .errors import CompatibilityError, ConfigError
from .metrics import relative_reduction
from .neuralnet import (
    DEFAULT_DIMS,
    MlpModel,
    N_HIDDEN,
    TrainConfig,
    default_activations,
    evaluate,
    init_network,
    load_model,
    output_activation_for,
    save_model,
    train,
)

DEFAULT_SEED_COUNT = 5
# decorrelates per-seed runs from per-cell fresh-init seeds (cell index <= 20)
SEED_STRIDE = 1000


@dataclass(frozen=True)
class TransferPlan:
    """Copy hidden layers n1..n2 (1-based, inclusive); (0, 0) copies nothing."""

    n1: int
    n2: int
    fine_tune_all: bool = True

    def __post_init__(self):
        if (self.n1, self.n2) == (0, 0):
            return
        if not 1 <= self.n1 <= self.n2 <= N_HIDDEN:
            raise ConfigError(
                f"need 1 <= n1 <= n2 <= {N_HIDDEN} (or (0, 0) for none), "
                f"got ({self.n1}, {self.n2})"
            )
        if not self.fine_tune_all:
            raise ConfigError("only fine_tune_all transfer is supported")

    @property
    def is_empty(self) -> bool:
        return (self.n1, self.n2) == (0, 0)

    def copied_layers(self) -> range:
        """0-based indices of the copied hidden layers."""
        if self.is_empty:
            return range(0)
        return range(self.n1 - 1, self.n2)

    @property
    def label(self) -> str:
        return "none" if self.is_empty else f"{self.n1}-{self.n2}"

    @staticmethod
    def first_n(n: int) -> "TransferPlan":
        return TransferPlan(0, 0) if n == 0 else TransferPlan(1, n)


@dataclass
class TransferResult:
    plan: TransferPlan
    direct_errors: list
    transfer_errors: list

    @property
    def direct_mean(self) -> float:
        return float(np.mean(self.direct_errors))

    @property
    def direct_std(self) -> float:
        return float(np.std(self.direct_errors))

    @property
    def transfer_mean(self) -> float:
        return float(np.mean(self.transfer_errors))

    @property
    def transfer_std(self) -> float:
        return float(np.std(self.transfer_errors))

    @property
    def reduction(self) -> float:
        return relative_reduction(self.direct_mean, self.transfer_mean)

    @property
    def negative_transfer(self) -> bool:
        return self.transfer_mean > self.direct_mean


@dataclass
class GridCell:
    n1: int
    n2: int
    status: str = "ok"  # "ok" | "failed"
    errors: list = field(default_factory=list)
    mean: float = math.nan
    std: float = math.nan
    reduction: float = math.nan
    negative_transfer: bool = False
    message: str = ""


def transfer_layers(base: MlpModel, plan: TransferPlan, seed: int,
                    output_activation: str | None = None,
                    target_dims=None) -> MlpModel:
    """Fresh target model with hidden layers n1..n2 copied bitwise from base.

    With the same seed, the non-copied layers are bitwise equal to a direct
    ``init_network`` draw, so transfer and direct runs differ only in the
    copied range. The target architecture (default: the base's own) must
    carry the base's fingerprint for the copy to make sense.
    """
    activations = list(base.activations)
    if output_activation is not None:
        activations[-1] = output_activation
    dims = tuple(target_dims) if target_dims is not None else base.dims
    model = init_network(dims, activations, seed=seed, input_scale=base.input_scale)
    if model.fingerprint != base.fingerprint:
        raise CompatibilityError(
            f"architecture fingerprints differ: source {base.fingerprint} "
            f"(dims {base.dims}) vs target {model.fingerprint} (dims {dims})"
        )
    for i in plan.copied_layers():
        model.layers[i] = base.layers[i].copy()
    model.provenance = {
        "init": "transfer",
        "copied_layers": plan.label,
        "source_fingerprint": base.fingerprint,
        "seed": seed,
    }
    return model


def _arch_for(dataset: LabeledDataset, hidden_width: int | None = None):
    """Standard architecture sized to the dataset's mask width and grid."""
    width = hidden_width if hidden_width else DEFAULT_DIMS[1]
    dims = (dataset.spec.mask_width,) + (width,) * N_HIDDEN + (dataset.spec.grid.n_points,)
    return dims, default_activations(output_activation_for(dataset.spec.kind))


def _base_key(dataset: LabeledDataset, config: TrainConfig, dims, activations) -> str:
    from .neuralnet import architecture_fingerprint

    return cache.content_key(
        {
            "kind": "basenet",
            "dataset": dataset.content_hash(),
            "fingerprint": architecture_fingerprint(dims, activations[:-1]),
            "output_activation": activations[-1],
            "config": config.to_dict(),
        }
    )


def run_cache_key(dataset: LabeledDataset, config: TrainConfig, init_desc: dict,
                  fingerprint: str, output_activation: str) -> str:
    return cache.content_key(
        {
            "kind": "run",
            "dataset": dataset.content_hash(),
            "config": config.to_dict(),
            "init": init_desc,
            "fingerprint": fingerprint,
            "output_activation": output_activation,
        }
    )


def load_or_train_base(source_dataset: LabeledDataset, config: TrainConfig,
                       cache_dir=None, hidden_width: int | None = None):
    """Train the source network once per (task, dataset, config); reuse after."""
    dims, activations = _arch_for(source_dataset, hidden_width)
    key = _base_key(source_dataset, config, dims, activations)
    path = cache.entry_path(cache_dir, "basenets", key)
    if path.exists():
        return load_model(path), key
    model = init_network(dims, activations, seed=config.seed)
    trained, history = train(model, source_dataset, config)
    test_error = evaluate(trained, source_dataset, "test")
    trained.provenance = {
        "init": "direct",
        "task": source_dataset.spec.to_dict(),
        "dataset": source_dataset.content_hash(),
        "seed": config.seed,
        "best_epoch": history.best_epoch,
        "val_error": min(history.val_error),
        "test_error": test_error,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(trained, path)
    # the same training viewed as a direct run: share it through the run cache
    run_key = run_cache_key(
        source_dataset, config, {"scheme": "direct", "seed": config.seed},
        trained.fingerprint, activations[-1],
    )
    if cache.json_get(cache_dir, "runs", run_key) is None:
        cache.json_put(cache_dir, "runs", run_key, {
            "test_error": test_error,
            "val_error": min(history.val_error),
            "best_epoch": history.best_epoch,
            "epochs_run": len(history.train_loss) - 1,
        })
    return trained, key


def cached_run(dataset: LabeledDataset, config: TrainConfig, init_model: MlpModel,
               init_desc: dict, cache_dir=None) -> dict:
    """Train + evaluate once per content key; later calls read the cache."""
    key = run_cache_key(
        dataset, config, init_desc, init_model.fingerprint,
        init_model.activations[-1],
    )
    hit = cache.json_get(cache_dir, "runs", key)
    if hit is not None:
        return hit
    trained, history = train(init_model, dataset, config)
    result = {
        "test_error": evaluate(trained, dataset, "test"),
        "val_error": min(history.val_error),
        "best_epoch": history.best_epoch,
        "epochs_run": len(history.train_loss) - 1,
    }
    cache.json_put(cache_dir, "runs", key, result)
    return result


def direct_errors(dataset: LabeledDataset, config: TrainConfig, seeds: int,
                  cache_dir=None, hidden_width: int | None = None) -> list:
    """Direct-learning test errors for seeds config.seed + k*stride."""
    dims, activations = _arch_for(dataset, hidden_width)
    errors = []
    for k in range(seeds):
        seed = config.seed + k * SEED_STRIDE
        run_cfg = _with_seed(config, seed)
        model = init_network(dims, activations, seed=seed)
        desc = {"scheme": "direct", "seed": seed}
        errors.append(cached_run(dataset, run_cfg, model, desc, cache_dir)["test_error"])
    return errors


def _with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    d = config.to_dict()
    d["seed"] = seed
    return TrainConfig(**d)


def _transfer_errors(base: MlpModel, base_key: str, dataset: LabeledDataset,
                     plan: TransferPlan, config: TrainConfig, seeds: int,
                     seed_offset: int, cache_dir=None) -> list:
    output_activation = output_activation_for(dataset.spec.kind)
    target_dims = (dataset.spec.mask_width,) + base.dims[1:-1] + (dataset.spec.grid.n_points,)
    errors = []
    for k in range(seeds):
        seed = config.seed + seed_offset + k * SEED_STRIDE
        run_cfg = _with_seed(config, seed)
        model = transfer_layers(base, plan, seed, output_activation, target_dims)
        desc = {
            "scheme": "transfer",
            "seed": seed,
            "base": base_key,
            "plan": [plan.n1, plan.n2],
        }
        errors.append(cached_run(dataset, run_cfg, model, desc, cache_dir)["test_error"])
    return errors


def run_transfer_experiment(source_dataset: LabeledDataset, target_dataset: LabeledDataset,
                            plan: TransferPlan, config: TrainConfig,
                            source_config: TrainConfig | None = None,
                            seeds: int = DEFAULT_SEED_COUNT, cache_dir=None,
                            hidden_width: int | None = None) -> TransferResult:
    """Transfer vs direct on one plan; identical data splits and configs."""
    base, base_key = load_or_train_base(
        source_dataset, source_config or config, cache_dir, hidden_width
    )
    direct = direct_errors(target_dataset, config, seeds, cache_dir, hidden_width)
    transferred = _transfer_errors(
        base, base_key, target_dataset, plan, config, seeds, 0, cache_dir
    )
    return TransferResult(plan=plan, direct_errors=direct, transfer_errors=transferred)


def all_grid_plans():
    """The 21 (n1, n2) cells with 1 <= n1 <= n2 <= 6."""
    return [
        TransferPlan(n1, n2)
        for n1 in range(1, N_HIDDEN + 1)
        for n2 in range(n1, N_HIDDEN + 1)
    ]


def grid_search_transfer(base: MlpModel, base_key: str, target_dataset: LabeledDataset,
                         config: TrainConfig, seeds: int = DEFAULT_SEED_COUNT,
                         cache_dir=None):
    """Every (n1, n2) transfer range vs the shared direct baseline.

    Each cell's fresh-init seeds are offset by the cell index so cells are
    decorrelated; a failed cell is recorded and does not abort the grid.
    Returns (cells, direct_errors).
    """
    direct = direct_errors(target_dataset, config, seeds, cache_dir)
    direct_mean = float(np.mean(direct))
    cells = []
    for cell_index, plan in enumerate(all_grid_plans()):
        cell = GridCell(n1=plan.n1, n2=plan.n2)
        try:
            errors = _transfer_errors(
                base, base_key, target_dataset, plan, config, seeds,
                cell_index + 1, cache_dir,
            )
            cell.errors = errors
            cell.mean = float(np.mean(errors))
            cell.std = float(np.std(errors))
            cell.reduction = relative_reduction(direct_mean, cell.mean)
            cell.negative_transfer = cell.mean > direct_mean
        except Exception as exc:  # record and continue with the other cells
            cell.status = "failed"
            cell.message = f"{type(exc).__name__}: {exc}"
        cells.append(cell)
    return cells, direct
