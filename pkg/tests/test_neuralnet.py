import numpy as np
import pytest

from spectra_xfer.dataset import LabeledDataset, TaskSpec, generate_dataset
from spectra_xfer.errors import (
    CompatibilityError,
    ConfigError,
    DimensionError,
    FormatError,
    VersionError,
)
from spectra_xfer import neuralnet as nn


def toy_model(seed=0, activations=("relu", "sigmoid", "linear")):
    return nn.init_network((3, 4, 4, 2), activations, seed=seed, input_scale=1.0)


def synthetic_dataset(n=40, in_dim=3, out_dim=2, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    features = rng.uniform(0.2, 1.0, size=(n, in_dim)) * scale
    targets = rng.uniform(0.2, 0.9, size=(n, out_dim))
    split = ["train"] * n
    for i in range(n - n // 5, n - n // 10):
        split[i] = "val"
    for i in range(n - n // 10, n):
        split[i] = "test"
    spec = TaskSpec(kind="film", layer_count=min(in_dim, 16), mask_width=in_dim)
    return LabeledDataset(features, targets, split, spec, seed)


class TestInit:
    def test_same_seed_is_bitwise_identical(self):
        a = nn.init_network((16, 256, 200), seed=5)
        b = nn.init_network((16, 256, 200), seed=5)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)
            assert np.array_equal(la.biases, lb.biases)

    def test_different_seeds_differ(self):
        a = nn.init_network((16, 256, 200), seed=5)
        b = nn.init_network((16, 256, 200), seed=6)
        assert not np.array_equal(a.layers[0].weights, b.layers[0].weights)

    def test_scaled_normal_std(self):
        model = nn.init_network((256, 40, 10), seed=1)
        w = model.layers[0].weights  # 40 * 256 = 10240 draws at fan_in 256
        expected = np.sqrt(2.0 / 256.0)
        assert abs(w.std() - expected) / expected < 0.05
        assert np.all(model.layers[0].biases == 0.0)

    def test_dimension_chain_enforced(self):
        with pytest.raises(ConfigError):
            nn.MlpModel([
                nn.DenseLayer(np.zeros((4, 3)), np.zeros(4), "relu"),
                nn.DenseLayer(np.zeros((2, 5)), np.zeros(2), "linear"),
            ])

    def test_fingerprint_tracks_architecture_not_output_head(self):
        film = nn.init_network((16, 32, 200), ("relu", "sigmoid"), seed=0)
        sphere = nn.init_network((16, 32, 200), ("relu", "softplus"), seed=0)
        other = nn.init_network((16, 64, 200), ("relu", "sigmoid"), seed=0)
        assert film.fingerprint == sphere.fingerprint
        assert film.fingerprint != other.fingerprint


class TestForward:
    def test_zero_weight_model_outputs_zero(self):
        model = toy_model()
        for layer in model.layers:
            layer.weights[:] = 0.0
            layer.biases[:] = 0.0
        model.layers[-1].activation = "linear"
        out = nn.predict(model, np.array([0.3, 0.4, 0.5]))
        assert np.all(out == 0.0)

    def test_train_mode_keep_prob_one_equals_eval(self):
        model = toy_model(seed=3)
        x = np.random.default_rng(0).uniform(size=(7, 3))
        eval_out = nn.predict(model, x)
        train_out, caches = nn.forward(
            model, x, train=True, keep_prob=1.0, rng=np.random.default_rng(9)
        )
        assert np.array_equal(eval_out, train_out)
        assert len(caches) == 3

    def test_single_linear_layer_is_plain_affine(self):
        w = np.array([[1.0, -2.0], [0.5, 3.0]])
        b = np.array([0.1, -0.2])
        model = nn.MlpModel([nn.DenseLayer(w, b, "linear")], input_scale=1.0)
        x = np.array([0.4, 0.7])
        assert np.allclose(nn.predict(model, x), w @ x + b, atol=0)

    def test_input_width_checked(self):
        with pytest.raises(DimensionError):
            nn.predict(toy_model(), np.zeros(5))


class TestLoss:
    def test_zero_when_exact_and_unregularized(self):
        out = np.array([0.2, 0.8])
        assert nn.loss(out, out) == 0.0

    def test_plain_mse_without_penalties(self):
        out = np.array([0.0, 1.0])
        tgt = np.array([1.0, 1.0])
        assert nn.loss(out, tgt) == pytest.approx(0.5, abs=1e-15)

    def test_penalties_added(self):
        model = toy_model()
        out = np.array([0.0, 1.0])
        tgt = np.array([1.0, 1.0])
        sum_sq = sum(np.sum(l.weights**2) for l in model.layers)
        sum_abs = sum(np.sum(np.abs(l.weights)) for l in model.layers)
        got = nn.loss(out, tgt, model, l1_lambda=0.01, l2_lambda=0.1)
        assert got == pytest.approx(0.5 + 0.1 * sum_sq + 0.01 * sum_abs, rel=1e-12)


def _flatten_params(model):
    return np.concatenate(
        [np.concatenate([l.weights.ravel(), l.biases]) for l in model.layers]
    )


def _set_params(model, flat):
    pos = 0
    for layer in model.layers:
        n_w = layer.weights.size
        layer.weights[:] = flat[pos : pos + n_w].reshape(layer.weights.shape)
        pos += n_w
        layer.biases[:] = flat[pos : pos + layer.biases.size]
        pos += layer.biases.size


def _loss_at(model, flat, x, y, config, dropout_seed=123):
    _set_params(model, flat)
    out, _ = nn.forward(
        model, x, train=True, keep_prob=config.keep_prob,
        rng=np.random.default_rng(dropout_seed),
    )
    return nn.loss(out, y, model, config.l1_lambda, config.l2_lambda)


def _analytic_grad(model, flat, x, y, config, dropout_seed=123):
    _set_params(model, flat)
    _, caches = nn.forward(
        model, x, train=True, keep_prob=config.keep_prob,
        rng=np.random.default_rng(dropout_seed),
    )
    grads = nn.backward(model, caches, y, config)
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


@pytest.mark.parametrize(
    "l1,l2,keep_prob",
    [(0.0, 0.0, 1.0), (0.0, 1e-3, 1.0), (1e-3, 0.0, 1.0), (5e-4, 5e-4, 0.8)],
)
@pytest.mark.parametrize("out_act", ["linear", "sigmoid", "softplus"])
def test_backward_matches_finite_differences(l1, l2, keep_prob, out_act):
    config = nn.TrainConfig(l1_lambda=l1, l2_lambda=l2, keep_prob=keep_prob, seed=0)
    model = toy_model(seed=11, activations=("relu", "sigmoid", out_act))
    rng = np.random.default_rng(7)
    x = rng.uniform(0.1, 1.0, size=(5, 3))
    y = rng.uniform(0.2, 0.8, size=(5, 2))
    flat = _flatten_params(model)
    analytic = _analytic_grad(model, flat.copy(), x, y, config)
    h = 1e-5
    worst = 0.0
    for k in range(flat.size):
        up = flat.copy()
        up[k] += h
        down = flat.copy()
        down[k] -= h
        fd = (_loss_at(model, up, x, y, config) - _loss_at(model, down, x, y, config)) / (2 * h)
        rel = abs(fd - analytic[k]) / max(abs(fd) + abs(analytic[k]), 1e-8)
        worst = max(worst, rel)
    assert worst < 1e-5


class TestBackwardSpecialCases:
    def test_zero_everything_gives_zero_gradients(self):
        model = toy_model()
        for layer in model.layers:
            layer.weights[:] = 0.0
        model.layers[-1].activation = "linear"
        config = nn.TrainConfig(seed=0)
        x = np.zeros((3, 3))
        y = np.zeros((3, 2))
        _, caches = nn.forward(model, x, train=True)
        grads = nn.backward(model, caches, y, config)
        for g_w, g_b in grads:
            assert np.all(g_w == 0.0) and np.all(g_b == 0.0)

    def test_l2_term_alone_gives_2_lambda_w(self):
        model = toy_model(seed=2)
        lam = 0.37
        # zero data gradient: output already equals target via a detached copy
        x = np.random.default_rng(1).uniform(size=(2, 3))
        out, caches = nn.forward(model, x, train=True)
        config = nn.TrainConfig(l2_lambda=lam, seed=0)
        grads = nn.backward(model, caches, out.copy(), config)
        for (g_w, _), layer in zip(grads, model.layers):
            assert np.allclose(g_w, 2.0 * lam * layer.weights, atol=1e-15)


class TestTrain:
    def test_all_frozen_returns_input_weights(self):
        model = toy_model(seed=4)
        ds = synthetic_dataset()
        cfg = nn.TrainConfig(epochs=3, batch_size=8, seed=1, patience=10)
        trained, _ = nn.train(model, ds, cfg, trainable_mask=[False, False, False])
        for la, lb in zip(trained.layers, model.layers):
            assert np.array_equal(la.weights, lb.weights)
            assert np.array_equal(la.biases, lb.biases)

    def test_zero_learning_rate_changes_nothing(self):
        model = toy_model(seed=4)
        ds = synthetic_dataset()
        cfg = nn.TrainConfig(epochs=1, batch_size=32, learning_rate=0.0, seed=1)
        trained, _ = nn.train(model, ds, cfg)
        for la, lb in zip(trained.layers, model.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_training_is_deterministic(self):
        ds = synthetic_dataset(n=60)
        cfg = nn.TrainConfig(epochs=8, batch_size=16, seed=3, keep_prob=0.9, patience=20)
        runs = []
        for _ in range(2):
            trained, hist = nn.train(toy_model(seed=4), ds, cfg)
            runs.append((trained, hist))
        assert runs[0][1].train_loss == runs[1][1].train_loss
        assert runs[0][1].val_error == runs[1][1].val_error
        for la, lb in zip(runs[0][0].layers, runs[1][0].layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_unregularized_config_matches_explicit_zeros(self):
        ds = synthetic_dataset(n=60)
        base = nn.TrainConfig(epochs=6, batch_size=16, seed=3)
        explicit = nn.TrainConfig(
            epochs=6, batch_size=16, seed=3, l1_lambda=0.0, l2_lambda=0.0, keep_prob=1.0
        )
        a, _ = nn.train(toy_model(seed=4), ds, base)
        b, _ = nn.train(toy_model(seed=4), ds, explicit)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_frozen_layers_bitwise_unchanged(self):
        model = toy_model(seed=4)
        ds = synthetic_dataset(n=60)
        cfg = nn.TrainConfig(epochs=6, batch_size=16, seed=2)
        trained, _ = nn.train(model, ds, cfg, trainable_mask=[True, False, True])
        assert np.array_equal(trained.layers[1].weights, model.layers[1].weights)
        assert np.array_equal(trained.layers[1].biases, model.layers[1].biases)
        assert not np.array_equal(trained.layers[0].weights, model.layers[0].weights)

    def test_history_invariants_and_improvement(self):
        ds = synthetic_dataset(n=80)
        cfg = nn.TrainConfig(epochs=60, batch_size=16, learning_rate=3e-3, seed=5, patience=60)
        trained, hist = nn.train(toy_model(seed=6), ds, cfg)
        assert len(hist.train_loss) == len(hist.val_loss) == len(hist.val_error)
        assert hist.val_error[hist.best_epoch] == min(hist.val_error)
        assert min(hist.val_error) < hist.val_error[0]
        assert nn.evaluate(trained, ds, "val") == pytest.approx(min(hist.val_error))

    def test_early_stopping_respects_patience(self):
        ds = synthetic_dataset(n=40)
        cfg = nn.TrainConfig(epochs=500, batch_size=8, learning_rate=0.0, seed=1, patience=5)
        _, hist = nn.train(toy_model(seed=4), ds, cfg)
        assert len(hist.train_loss) == 6  # epoch 0 plus patience epochs


class TestCheckpoint:
    def test_round_trip_outputs_bitwise_equal(self, tmp_path):
        model = nn.init_network((16, 32, 32, 200), ("relu", "relu", "sigmoid"), seed=9)
        path = tmp_path / "model.json"
        nn.save_model(model, path, provenance={"note": "test"})
        again = nn.load_model(path)
        x = np.random.default_rng(1).uniform(30, 70, size=(100, 16))
        assert np.array_equal(nn.predict(model, x), nn.predict(again, x))
        assert again.provenance == {"note": "test"}
        assert again.input_scale == model.input_scale
        assert again.seed == model.seed

    def test_corrupted_weight_block_rejected(self, tmp_path):
        import json

        model = toy_model(seed=1)
        path = tmp_path / "model.json"
        nn.save_model(model, path)
        doc = json.loads(path.read_text())
        doc["layers"][1]["weights"] = doc["layers"][1]["weights"][:-8]
        path.write_text(json.dumps(doc))
        with pytest.raises(FormatError):
            nn.load_model(path)

    def test_version_bump_rejected(self, tmp_path):
        import json

        model = toy_model(seed=1)
        path = tmp_path / "model.json"
        nn.save_model(model, path)
        doc = json.loads(path.read_text())
        doc["version"] = 2
        path.write_text(json.dumps(doc))
        with pytest.raises(VersionError):
            nn.load_model(path)

    def test_fingerprint_mismatch_rejected(self, tmp_path):
        model = toy_model(seed=1)
        path = tmp_path / "model.json"
        nn.save_model(model, path)
        with pytest.raises(CompatibilityError):
            nn.load_model(path, expected_fingerprint="deadbeefdeadbeef")


class TestDataScaling:
    def test_more_data_means_lower_test_error(self):
        # scaled-down version of the large-vs-small data sanity check
        spec = TaskSpec(kind="film", layer_count=8)
        big = generate_dataset(spec, 1500, seed=21)
        small = generate_dataset(spec, 300, seed=22)
        dims = nn.DEFAULT_DIMS
        acts = nn.default_activations("sigmoid")
        cfg_big = nn.TrainConfig(epochs=60, batch_size=32, seed=0, patience=15)
        cfg_small = nn.TrainConfig(epochs=120, batch_size=32, seed=0, patience=30)
        m_big, _ = nn.train(nn.init_network(dims, acts, seed=0), big, cfg_big)
        m_small, _ = nn.train(nn.init_network(dims, acts, seed=0), small, cfg_small)
        err_big = nn.evaluate(m_big, big)
        err_small = nn.evaluate(m_small, small)
        assert err_big < err_small
