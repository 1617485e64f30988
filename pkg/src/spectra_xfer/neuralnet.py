"""Minimal dense feed-forward network with exact backpropagation.

Everything a spectrum-regression experiment needs and nothing more: scaled
normal initialization, ReLU/sigmoid/softplus/linear activations, MSE loss
with optional L1/L2 weight penalties, inverted dropout on hidden layers,
mini-batch Adam with per-layer freezing, early stopping on the validation
spectrum error, and an exact JSON + base64 checkpoint format.

Training is deterministic: the shuffle and dropout streams are derived from
the config seed, and the best-validation snapshot (including the untrained
epoch-0 state) is returned.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CompatibilityError,
    ConfigError,
    DimensionError,
    FormatError,
    NumericalError,
    TrainingError,
    VersionError,
)
from .metrics import mean_spectrum_error

CHECKPOINT_VERSION = 1
ACTIVATIONS = ("relu", "sigmoid", "linear", "softplus")
DEFAULT_INPUT_SCALE = 70.0  # max thickness in nm; features are stored raw

# input 16 -> six hidden layers of 256 -> 200 output
DEFAULT_DIMS = (16, 256, 256, 256, 256, 256, 256, 200)
N_HIDDEN = 6


def output_activation_for(kind: str) -> str:
    """Film transmissivity lives in [0, 1]; sphere Q_sca is only nonnegative."""
    if kind == "film":
        return "sigmoid"
    if kind == "sphere":
        return "softplus"
    raise ConfigError(f"unknown task kind {kind!r}")


def default_activations(output_activation: str = "sigmoid") -> tuple:
    return ("relu",) * N_HIDDEN + (output_activation,)


def architecture_fingerprint(dims, hidden_activations) -> str:
    """Digest of layer dims + hidden activations.

    The output activation is deliberately excluded: weight transfer copies
    hidden layers between tasks whose output heads differ (transmission vs
    scattering), and those models must count as transfer-compatible.
    """
    payload = json.dumps([list(dims), list(hidden_activations)], separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_out, fan_in)
    biases: np.ndarray  # (fan_out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise DimensionError("layer weights must be (fan_out, fan_in), biases (fan_out,)")

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.biases.copy(), self.activation)


@dataclass
class MlpModel:
    layers: list
    input_scale: float = DEFAULT_INPUT_SCALE
    seed: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.fan_out != b.fan_in:
                raise ConfigError(
                    f"layer dims do not chain: {a.fan_out} -> {b.fan_in}"
                )

    @property
    def dims(self) -> tuple:
        return (self.layers[0].fan_in,) + tuple(l.fan_out for l in self.layers)

    @property
    def activations(self) -> tuple:
        return tuple(l.activation for l in self.layers)

    @property
    def fingerprint(self) -> str:
        return architecture_fingerprint(self.dims, self.activations[:-1])

    def copy(self) -> "MlpModel":
        return MlpModel(
            [l.copy() for l in self.layers],
            input_scale=self.input_scale,
            seed=self.seed,
            provenance=dict(self.provenance),
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    l2_lambda: float = 0.0
    l1_lambda: float = 0.0
    keep_prob: float = 1.0
    patience: int = 50
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer != "adam":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError(f"keep_prob must be in (0, 1], got {self.keep_prob}")
        if self.l1_lambda < 0 or self.l2_lambda < 0:
            raise ConfigError("regularization strengths must be >= 0")
        if self.epochs < 0 or self.batch_size < 1 or self.patience < 0:
            raise ConfigError("epochs/batch_size/patience out of range")
        if self.learning_rate < 0:
            raise ConfigError("learning rate must be >= 0")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "l2_lambda": self.l2_lambda,
            "l1_lambda": self.l1_lambda,
            "keep_prob": self.keep_prob,
            "patience": self.patience,
            "seed": self.seed,
        }


@dataclass
class TrainHistory:
    """Per-epoch curves; index 0 is the untrained starting model."""

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_error: list = field(default_factory=list)
    best_epoch: int = 0


def init_network(dims, activations=None, seed: int = 0,
                 input_scale: float = DEFAULT_INPUT_SCALE) -> MlpModel:
    """Fresh model: weights ~ Normal(0, sqrt(2/fan_in)), biases zero."""
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise ConfigError("need at least input and output dims")
    if activations is None:
        activations = ("relu",) * (len(dims) - 2) + ("sigmoid",)
    activations = tuple(activations)
    if len(activations) != len(dims) - 1:
        raise ConfigError(
            f"{len(dims) - 1} layers need {len(dims) - 1} activations, got {len(activations)}"
        )
    rng = np.random.default_rng(seed)
    layers = [
        _init_layer(rng, fan_in, fan_out, act)
        for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations)
    ]
    return MlpModel(layers, input_scale=input_scale, seed=seed)


def _init_layer(rng: np.random.Generator, fan_in: int, fan_out: int, activation: str) -> DenseLayer:
    sigma = np.sqrt(2.0 / fan_in)
    weights = rng.normal(0.0, sigma, size=(fan_out, fan_in))
    return DenseLayer(weights, np.zeros(fan_out), activation)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _apply_activation(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "sigmoid":
        return _sigmoid(z)
    if tag == "softplus":
        return np.logaddexp(0.0, z)
    return z  # linear


def _activation_grad(tag: str, z: np.ndarray, a: np.ndarray) -> np.ndarray | None:
    """d activation / d z; None means identity (linear)."""
    if tag == "relu":
        return (z > 0.0).astype(float)
    if tag == "sigmoid":
        return a * (1.0 - a)
    if tag == "softplus":
        return _sigmoid(z)
    return None


def _forward_layers(layers, x: np.ndarray, input_scale: float,
                    keep_prob: float = 1.0, rng: np.random.Generator | None = None):
    """Forward pass over a layer list; returns (output, caches).

    Dropout (inverted scaling) is applied to every layer output except the
    last one, and only when keep_prob < 1 and an rng is supplied.
    """
    a = np.asarray(x, dtype=float) / input_scale
    caches = []
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        z = a @ layer.weights.T + layer.biases
        act = _apply_activation(layer.activation, z)
        mask = None
        out = act
        if keep_prob < 1.0 and rng is not None and i < last:
            mask = rng.random(act.shape) < keep_prob
            out = act * mask / keep_prob
        caches.append((a, z, act, mask))
        a = out
    return a, caches


def forward(model: MlpModel, x, train: bool = False, keep_prob: float = 1.0,
            rng: np.random.Generator | None = None):
    """Run the network; in train mode also return the activation caches."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != model.layers[0].fan_in:
        raise DimensionError(
            f"input width {batch.shape[1]} != first layer fan_in {model.layers[0].fan_in}"
        )
    out, caches = _forward_layers(
        model.layers, batch, model.input_scale,
        keep_prob if train else 1.0, rng if train else None,
    )
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite activation in forward pass")
    if single:
        out = out[0]
    return (out, caches) if train else (out, None)


def predict(model: MlpModel, x) -> np.ndarray:
    """Evaluation-mode forward pass (no dropout, no caches)."""
    return forward(model, x)[0]


def penalty(model_layers, l1_lambda: float, l2_lambda: float) -> float:
    """Weight penalty l2*sum(w^2) + l1*sum(|w|); biases are never penalized."""
    total = 0.0
    if l2_lambda:
        total += l2_lambda * sum(float(np.sum(l.weights**2)) for l in model_layers)
    if l1_lambda:
        total += l1_lambda * sum(float(np.sum(np.abs(l.weights))) for l in model_layers)
    return total


def loss(output, target, model: MlpModel | None = None,
         l1_lambda: float = 0.0, l2_lambda: float = 0.0) -> float:
    """Mean squared error over all output elements plus weight penalties."""
    output = np.asarray(output, dtype=float)
    target = np.asarray(target, dtype=float)
    if output.shape != target.shape:
        raise DimensionError(f"output {output.shape} and target {target.shape} differ")
    value = float(np.mean((output - target) ** 2))
    if model is not None:
        value += penalty(model.layers, l1_lambda, l2_lambda)
    return value


def _backward_layers(layers, caches, d_out: np.ndarray, keep_prob: float,
                     l1_lambda: float, l2_lambda: float):
    """Exact gradients for every layer given d(loss)/d(final output)."""
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        a_in, z, act, mask = caches[i]
        if mask is not None:
            d_out = d_out * mask / keep_prob
        g = _activation_grad(layers[i].activation, z, act)
        delta = d_out if g is None else d_out * g
        g_w = delta.T @ a_in
        if l2_lambda:
            g_w = g_w + 2.0 * l2_lambda * layers[i].weights
        if l1_lambda:
            g_w = g_w + l1_lambda * np.sign(layers[i].weights)
        grads[i] = (g_w, delta.sum(axis=0))
        if i:
            d_out = delta @ layers[i].weights
    return grads


def backward(model: MlpModel, caches, target, config: TrainConfig):
    """Gradients of the training loss for a cached forward pass."""
    # the final layer never carries dropout, so its post-activation is the output
    output = caches[-1][2]
    target = np.asarray(target, dtype=float)
    d_out = 2.0 * (output - target) / output.size
    return _backward_layers(
        model.layers, caches, d_out, config.keep_prob, config.l1_lambda, config.l2_lambda
    )


class _AdamState:
    __slots__ = ("m_w", "v_w", "m_b", "v_b", "t", "_scratch_w", "_scratch_b")

    def __init__(self, layer: DenseLayer):
        self.m_w = np.zeros_like(layer.weights)
        self.v_w = np.zeros_like(layer.weights)
        self.m_b = np.zeros_like(layer.biases)
        self.v_b = np.zeros_like(layer.biases)
        self._scratch_w = np.empty_like(layer.weights)
        self._scratch_b = np.empty_like(layer.biases)
        self.t = 0


def _adam_update_inplace(param, grad, m, v, scratch, cfg, c1, c2):
    # m = b1 m + (1-b1) g ; v = b2 v + (1-b2) g^2 ; p -= lr (m/c1) / (sqrt(v/c2) + eps)
    m *= cfg.beta1
    np.multiply(grad, 1.0 - cfg.beta1, out=scratch)
    m += scratch
    v *= cfg.beta2
    np.multiply(grad, grad, out=scratch)
    scratch *= 1.0 - cfg.beta2
    v += scratch
    np.divide(v, c2, out=scratch)
    np.sqrt(scratch, out=scratch)
    scratch += cfg.eps
    np.divide(m, scratch, out=scratch)
    scratch *= cfg.learning_rate / c1
    param -= scratch


def _adam_step(layer: DenseLayer, grad, state: _AdamState, cfg: TrainConfig) -> None:
    g_w, g_b = grad
    state.t += 1
    c1 = 1 - cfg.beta1**state.t
    c2 = 1 - cfg.beta2**state.t
    _adam_update_inplace(layer.weights, g_w, state.m_w, state.v_w, state._scratch_w, cfg, c1, c2)
    _adam_update_inplace(layer.biases, g_b, state.m_b, state.v_b, state._scratch_b, cfg, c1, c2)


def _batch_slices(n: int, batch_size: int):
    return [slice(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]


def train(model: MlpModel, dataset, config: TrainConfig, trainable_mask=None):
    """Mini-batch Adam on the train split with early stopping on val error.

    Returns the best-validation snapshot (the untrained input model counts as
    the epoch-0 candidate) and the full history. Layers whose trainable_mask
    entry is False are never touched.
    """
    x_train, y_train = dataset.subset("train")
    x_val, y_val = dataset.subset("val")
    if x_train.shape[1] != model.layers[0].fan_in:
        raise DimensionError(
            f"dataset feature width {x_train.shape[1]} != model input {model.layers[0].fan_in}"
        )
    if trainable_mask is None:
        trainable_mask = [True] * len(model.layers)
    if len(trainable_mask) != len(model.layers):
        raise ConfigError("trainable_mask length must equal the layer count")

    layers = [l.copy() for l in model.layers]
    states = [_AdamState(l) for l in layers]
    ss = np.random.SeedSequence(config.seed)
    shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in ss.spawn(2))

    def eval_model(current) -> tuple:
        out_t, _ = _forward_layers(current, x_train, model.input_scale)
        train_l = loss(out_t, y_train) + penalty(current, config.l1_lambda, config.l2_lambda)
        out_v, _ = _forward_layers(current, x_val, model.input_scale)
        return train_l, loss(out_v, y_val), mean_spectrum_error(out_v, y_val)

    history = TrainHistory()
    t_l, v_l, v_e = eval_model(layers)
    history.train_loss.append(t_l)
    history.val_loss.append(v_l)
    history.val_error.append(v_e)
    best_layers = [l.copy() for l in layers]
    best_error = v_e
    history.best_epoch = 0

    n = x_train.shape[0]
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for sl in _batch_slices(n, config.batch_size):
            idx = perm[sl]
            xb, yb = x_train[idx], y_train[idx]
            out, caches = _forward_layers(
                layers, xb, model.input_scale, config.keep_prob, dropout_rng
            )
            batch_loss = float(np.mean((out - yb) ** 2))
            if not np.isfinite(batch_loss):
                raise TrainingError(f"training diverged at epoch {epoch}")
            epoch_loss += batch_loss * len(idx)
            d_out = 2.0 * (out - yb) / out.size
            grads = _backward_layers(
                layers, caches, d_out, config.keep_prob, config.l1_lambda, config.l2_lambda
            )
            for i, trainable in enumerate(trainable_mask):
                if trainable:
                    _adam_step(layers[i], grads[i], states[i], config)
        train_l = epoch_loss / n + penalty(layers, config.l1_lambda, config.l2_lambda)
        out_v, _ = _forward_layers(layers, x_val, model.input_scale)
        val_l = loss(out_v, y_val)
        val_e = mean_spectrum_error(out_v, y_val)
        history.train_loss.append(train_l)
        history.val_loss.append(val_l)
        history.val_error.append(val_e)
        if val_e < best_error:
            best_error = val_e
            best_layers = [l.copy() for l in layers]
            history.best_epoch = epoch
        if epoch - history.best_epoch >= config.patience:
            break

    best = MlpModel(
        best_layers,
        input_scale=model.input_scale,
        seed=model.seed,
        provenance=dict(model.provenance),
    )
    return best, history


def evaluate(model: MlpModel, dataset, split: str = "test") -> float:
    """Mean spectrum error of the model over one dataset split."""
    x, y = dataset.subset(split)
    return mean_spectrum_error(predict(model, x), y)


def _encode_block(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode()


def _decode_block(text: str, shape: tuple, what: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode(), validate=True)
    except Exception:
        raise FormatError(f"corrupted base64 in {what}") from None
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise FormatError(f"{what}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()


def save_model(model: MlpModel, path, provenance: dict | None = None) -> None:
    """Checkpoint: JSON header plus base64 row-major float64 blocks per layer."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "architecture": list(model.dims),
        "activations": list(model.activations),
        "normalization": model.input_scale,
        "seed": model.seed,
        "fingerprint": model.fingerprint,
        "provenance": provenance if provenance is not None else model.provenance,
        "layers": [
            {"weights": _encode_block(l.weights), "biases": _encode_block(l.biases)}
            for l in model.layers
        ],
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    tmp.replace(path)


def load_model(path, expected_fingerprint: str | None = None) -> MlpModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: not valid JSON: {exc}") from None
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise VersionError(
            f"{path.name}: checkpoint version {version!r} != supported {CHECKPOINT_VERSION}"
        )
    try:
        dims = [int(d) for d in doc["architecture"]]
        activations = list(doc["activations"])
        blocks = doc["layers"]
    except KeyError as exc:
        raise FormatError(f"{path.name}: missing field {exc.args[0]!r}") from None
    if len(blocks) != len(dims) - 1 or len(activations) != len(dims) - 1:
        raise FormatError(f"{path.name}: layer count mismatch with architecture")
    layers = []
    for i, (fan_in, fan_out, act, block) in enumerate(
        zip(dims[:-1], dims[1:], activations, blocks)
    ):
        weights = _decode_block(block["weights"], (fan_out, fan_in), f"layer {i} weights")
        biases = _decode_block(block["biases"], (fan_out,), f"layer {i} biases")
        layers.append(DenseLayer(weights, biases, act))
    model = MlpModel(
        layers,
        input_scale=float(doc.get("normalization", DEFAULT_INPUT_SCALE)),
        seed=int(doc.get("seed", 0)),
        provenance=dict(doc.get("provenance", {})),
    )
    stored = doc.get("fingerprint")
    if stored is not None and stored != model.fingerprint:
        raise FormatError(
            f"{path.name}: stored fingerprint {stored} != recomputed {model.fingerprint}"
        )
    if expected_fingerprint is not None and model.fingerprint != expected_fingerprint:
        raise CompatibilityError(
            f"{path.name}: fingerprint {model.fingerprint} != expected {expected_fingerprint}"
        )
    return model
