"""Hard parameter sharing: a shared trunk plus per-task head stacks.

The first n_shared hidden layers are shared by every task; each task owns
the remaining hidden layers plus its output layer. Training interleaves
task-homogeneous mini-batches round-robin ("all data are fed in each update
cycle"); a batch from task t updates only the trunk and t's head, other
heads are untouched. Model selection uses the unweighted mean of per-task
validation errors. With a single task and the full depth in the trunk this
reduces exactly to direct training, which the tests exploit.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError, TrainingError, VersionError
from .metrics import mean_spectrum_error
from .neuralnet import (
    DEFAULT_DIMS,
    DEFAULT_INPUT_SCALE,
    DenseLayer,
    N_HIDDEN,
    TrainConfig,
    TrainHistory,
    _AdamState,
    _adam_step,
    _backward_layers,
    _batch_slices,
    _forward_layers,
    _init_layer,
    loss as nn_loss,
    penalty,
)

MULTITASK_CHECKPOINT_VERSION = 1


@dataclass
class MultiTaskModel:
    trunk: list
    heads: dict  # task id -> list of DenseLayer
    input_scale: float = DEFAULT_INPUT_SCALE
    seed: int = 0
    n_shared: int = 1
    provenance: dict = field(default_factory=dict)

    @property
    def task_ids(self) -> tuple:
        return tuple(self.heads)

    def task_layers(self, task_id: str) -> list:
        if task_id not in self.heads:
            raise KeyError(f"unknown task id {task_id!r}")
        return self.trunk + self.heads[task_id]

    def copy(self) -> "MultiTaskModel":
        return MultiTaskModel(
            trunk=[l.copy() for l in self.trunk],
            heads={t: [l.copy() for l in h] for t, h in self.heads.items()},
            input_scale=self.input_scale,
            seed=self.seed,
            n_shared=self.n_shared,
            provenance=dict(self.provenance),
        )


def build_multitask(n_shared: int, tasks, seed: int, dims=DEFAULT_DIMS,
                    input_scale: float = DEFAULT_INPUT_SCALE) -> MultiTaskModel:
    """Fresh trunk + one head per task.

    ``tasks``: ordered (task_id, output_activation) pairs. All weights come
    from one seeded stream, trunk first and then head after head, so a
    single-task model with the full depth shared is bitwise identical to the
    plain network drawn from the same seed.
    """
    n_hidden = len(dims) - 2
    if not 1 <= n_shared <= n_hidden:
        raise ConfigError(f"n_shared must be in [1, {n_hidden}], got {n_shared}")
    tasks = list(tasks)
    if not tasks:
        raise ConfigError("need at least one task")
    ids = [t for t, _ in tasks]
    if len(set(ids)) != len(ids):
        raise ConfigError("task ids must be unique")
    rng = np.random.default_rng(seed)
    trunk = [
        _init_layer(rng, dims[i], dims[i + 1], "relu") for i in range(n_shared)
    ]
    heads = {}
    for task_id, output_activation in tasks:
        head = [
            _init_layer(rng, dims[i], dims[i + 1], "relu")
            for i in range(n_shared, n_hidden)
        ]
        head.append(_init_layer(rng, dims[-2], dims[-1], output_activation))
        heads[task_id] = head
    return MultiTaskModel(trunk=trunk, heads=heads, seed=seed, n_shared=n_shared,
                          input_scale=input_scale)


@dataclass
class MultiTaskHistory:
    per_task: dict  # task id -> TrainHistory
    mean_val_error: list = field(default_factory=list)
    best_epoch: int = 0


def _epoch_chunks(n: int, batch_size: int, n_slots: int, rng: np.random.Generator):
    """n_slots index arrays: chunks of fresh permutations, recycling as needed."""
    chunks = []
    while len(chunks) < n_slots:
        perm = rng.permutation(n)
        chunks.extend(perm[sl] for sl in _batch_slices(n, batch_size))
    return chunks[:n_slots]


def train_multitask(model: MultiTaskModel, datasets: dict, config: TrainConfig):
    """Round-robin multi-task training; returns (best model, history).

    One epoch is a full pass over the largest task's train split; smaller
    tasks recycle reshuffled permutations. Early stopping and best-snapshot
    selection use the mean of per-task validation spectrum errors.
    """
    if set(datasets) != set(model.heads):
        raise ConfigError(
            f"datasets {sorted(datasets)} do not match registered tasks {sorted(model.heads)}"
        )
    task_ids = list(model.task_ids)
    data = {}
    for task_id in task_ids:
        ds = datasets[task_id]
        x_tr, y_tr = ds.subset("train")
        x_va, y_va = ds.subset("val")
        if x_tr.shape[1] != model.trunk[0].fan_in:
            raise DimensionError(
                f"task {task_id}: feature width {x_tr.shape[1]} != input "
                f"{model.trunk[0].fan_in}"
            )
        data[task_id] = (x_tr, y_tr, x_va, y_va)

    work = model.copy()
    trunk_states = [_AdamState(l) for l in work.trunk]
    head_states = {t: [_AdamState(l) for l in h] for t, h in work.heads.items()}
    ss = np.random.SeedSequence(config.seed)
    shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in ss.spawn(2))

    def eval_epoch(current: MultiTaskModel, train_losses: dict | None):
        mean_errors = []
        for task_id in task_ids:
            x_tr, y_tr, x_va, y_va = data[task_id]
            layers = current.task_layers(task_id)
            if train_losses is None:
                out_t, _ = _forward_layers(layers, x_tr, current.input_scale)
                t_loss = nn_loss(out_t, y_tr) + penalty(layers, config.l1_lambda, config.l2_lambda)
            else:
                t_loss = train_losses[task_id]
            out_v, _ = _forward_layers(layers, x_va, current.input_scale)
            hist = histories[task_id]
            hist.train_loss.append(t_loss)
            hist.val_loss.append(nn_loss(out_v, y_va))
            err = mean_spectrum_error(out_v, y_va)
            hist.val_error.append(err)
            mean_errors.append(err)
        return float(np.mean(mean_errors))

    histories = {t: TrainHistory() for t in task_ids}
    history = MultiTaskHistory(per_task=histories)
    history.mean_val_error.append(eval_epoch(work, None))
    best_error = history.mean_val_error[0]
    best_model = work.copy()
    history.best_epoch = 0

    n_slots = max(
        len(_batch_slices(data[t][0].shape[0], config.batch_size)) for t in task_ids
    )
    for epoch in range(1, config.epochs + 1):
        chunk_lists = {
            t: _epoch_chunks(data[t][0].shape[0], config.batch_size, n_slots, shuffle_rng)
            for t in task_ids
        }
        epoch_losses = {t: 0.0 for t in task_ids}
        counts = {t: 0 for t in task_ids}
        for slot in range(n_slots):
            for task_id in task_ids:
                idx = chunk_lists[task_id][slot]
                x_tr, y_tr, _, _ = data[task_id]
                xb, yb = x_tr[idx], y_tr[idx]
                layers = work.task_layers(task_id)
                out, caches = _forward_layers(
                    layers, xb, work.input_scale, config.keep_prob, dropout_rng
                )
                batch_loss = float(np.mean((out - yb) ** 2))
                if not np.isfinite(batch_loss):
                    raise TrainingError(
                        f"training diverged for task {task_id} at epoch {epoch}"
                    )
                epoch_losses[task_id] += batch_loss * len(idx)
                counts[task_id] += len(idx)
                d_out = 2.0 * (out - yb) / out.size
                grads = _backward_layers(
                    layers, caches, d_out, config.keep_prob,
                    config.l1_lambda, config.l2_lambda,
                )
                states = trunk_states + head_states[task_id]
                for layer, grad, state in zip(layers, grads, states):
                    _adam_step(layer, grad, state, config)
        train_losses = {
            t: epoch_losses[t] / counts[t]
            + penalty(work.task_layers(t), config.l1_lambda, config.l2_lambda)
            for t in task_ids
        }
        mean_err = eval_epoch(work, train_losses)
        history.mean_val_error.append(mean_err)
        if mean_err < best_error:
            best_error = mean_err
            best_model = work.copy()
            history.best_epoch = epoch
        if epoch - history.best_epoch >= config.patience:
            break

    for hist in histories.values():
        hist.best_epoch = history.best_epoch
    return best_model, history


def forward_task(model: MultiTaskModel, task_id: str, x) -> np.ndarray:
    """Evaluation-mode forward pass through trunk + one task head."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    out, _ = _forward_layers(model.task_layers(task_id), batch, model.input_scale)
    return out[0] if single else out


def evaluate_multitask(model: MultiTaskModel, task_id: str, dataset,
                       split: str = "test") -> float:
    """Mean spectrum error of one task's head on a dataset split."""
    x, y = dataset.subset(split)
    return mean_spectrum_error(forward_task(model, task_id, x), y)


def sweep_shared_depth(tasks, datasets: dict, config: TrainConfig,
                       depths=tuple(range(1, N_HIDDEN)), seeds: int = 1,
                       dims=DEFAULT_DIMS, seed_stride: int = 1000):
    """Test error per task for each shared depth, averaged over seeds.

    Returns {depth: {task_id: mean test error}}.
    """
    results = {}
    for depth in depths:
        per_task = {t: [] for t, _ in tasks}
        for k in range(seeds):
            seed = config.seed + k * seed_stride
            cfg = TrainConfig(**{**config.to_dict(), "seed": seed})
            model = build_multitask(depth, tasks, seed=seed, dims=dims)
            trained, _ = train_multitask(model, datasets, cfg)
            for task_id, _ in tasks:
                per_task[task_id].append(
                    evaluate_multitask(trained, task_id, datasets[task_id])
                )
        results[depth] = {t: float(np.mean(v)) for t, v in per_task.items()}
    return results


def _encode(arr) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode()


def _decode(text, shape, what):
    raw = base64.b64decode(text.encode())
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise FormatError(f"{what}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()


def _layers_doc(layers) -> list:
    return [
        {
            "fan_in": l.fan_in,
            "fan_out": l.fan_out,
            "activation": l.activation,
            "weights": _encode(l.weights),
            "biases": _encode(l.biases),
        }
        for l in layers
    ]


def _layers_from_doc(doc, what):
    layers = []
    for i, entry in enumerate(doc):
        shape = (int(entry["fan_out"]), int(entry["fan_in"]))
        weights = _decode(entry["weights"], shape, f"{what} layer {i} weights")
        biases = _decode(entry["biases"], (shape[0],), f"{what} layer {i} biases")
        layers.append(DenseLayer(weights, biases, entry["activation"]))
    return layers


def save_multitask_model(model: MultiTaskModel, path, provenance=None) -> None:
    """Same block format as plain checkpoints plus a head registry section."""
    doc = {
        "version": MULTITASK_CHECKPOINT_VERSION,
        "normalization": model.input_scale,
        "seed": model.seed,
        "n_shared": model.n_shared,
        "trunk": _layers_doc(model.trunk),
        "heads": {t: _layers_doc(h) for t, h in model.heads.items()},
        "provenance": provenance if provenance is not None else model.provenance,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    tmp.replace(path)


def load_multitask_model(path) -> MultiTaskModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: not valid JSON: {exc}") from None
    version = doc.get("version")
    if version != MULTITASK_CHECKPOINT_VERSION:
        raise VersionError(
            f"{path.name}: version {version!r} != supported {MULTITASK_CHECKPOINT_VERSION}"
        )
    return MultiTaskModel(
        trunk=_layers_from_doc(doc["trunk"], "trunk"),
        heads={t: _layers_from_doc(h, f"head {t}") for t, h in doc["heads"].items()},
        input_scale=float(doc.get("normalization", DEFAULT_INPUT_SCALE)),
        seed=int(doc.get("seed", 0)),
        n_shared=int(doc.get("n_shared", 1)),
        provenance=dict(doc.get("provenance", {})),
    )
