import numpy as np
import pytest

from spectra_xfer.dataset import TaskSpec, generate_dataset
from spectra_xfer.errors import CompatibilityError, ConfigError
from spectra_xfer import neuralnet as nn
from spectra_xfer import transfer as tx

SMALL_DIMS = (4, 8, 8, 8, 8, 8, 8, 5)
SMALL_ACTS = ("relu",) * 6 + ("sigmoid",)


def small_base(seed=77):
    model = nn.init_network(SMALL_DIMS, SMALL_ACTS, seed=seed, input_scale=1.0)
    for layer in model.layers:  # make base weights recognizably non-fresh
        layer.weights += 10.0
    return model


class TestTransferPlan:
    def test_empty_sentinel(self):
        plan = tx.TransferPlan(0, 0)
        assert plan.is_empty and list(plan.copied_layers()) == []
        assert plan.label == "none"

    def test_first_n_helper(self):
        assert tx.TransferPlan.first_n(3) == tx.TransferPlan(1, 3)
        assert tx.TransferPlan.first_n(0).is_empty

    @pytest.mark.parametrize("n1,n2", [(0, 3), (2, 1), (1, 7), (-1, 2)])
    def test_invalid_ranges_rejected(self, n1, n2):
        with pytest.raises(ConfigError):
            tx.TransferPlan(n1, n2)

    def test_grid_has_21_plans(self):
        plans = tx.all_grid_plans()
        assert len(plans) == 21
        assert len({(p.n1, p.n2) for p in plans}) == 21


class TestTransferLayers:
    def test_empty_plan_equals_fresh_init(self):
        base = small_base()
        got = tx.transfer_layers(base, tx.TransferPlan(0, 0), seed=5)
        fresh = nn.init_network(SMALL_DIMS, SMALL_ACTS, seed=5, input_scale=1.0)
        for a, b in zip(got.layers, fresh.layers):
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.biases, b.biases)

    def test_full_plan_copies_all_hidden_layers(self):
        base = small_base()
        got = tx.transfer_layers(base, tx.TransferPlan(1, 6), seed=5)
        for i in range(6):
            assert np.array_equal(got.layers[i].weights, base.layers[i].weights)
            assert np.array_equal(got.layers[i].biases, base.layers[i].biases)
        fresh = nn.init_network(SMALL_DIMS, SMALL_ACTS, seed=5, input_scale=1.0)
        assert np.array_equal(got.layers[6].weights, fresh.layers[6].weights)

    def test_partial_plan_mixes_provenance(self):
        base = small_base()
        got = tx.transfer_layers(base, tx.TransferPlan(2, 3), seed=9)
        fresh = nn.init_network(SMALL_DIMS, SMALL_ACTS, seed=9, input_scale=1.0)
        for i in (1, 2):  # copied range (0-based)
            assert np.array_equal(got.layers[i].weights, base.layers[i].weights)
        for i in (0, 3, 4, 5, 6):
            assert np.array_equal(got.layers[i].weights, fresh.layers[i].weights)

    def test_fingerprint_mismatch_rejected(self):
        base = small_base()
        wider_target = (4, 16, 16, 16, 16, 16, 16, 5)
        with pytest.raises(CompatibilityError):
            tx.transfer_layers(base, tx.TransferPlan(1, 2), seed=0,
                               target_dims=wider_target)

    def test_output_activation_override(self):
        base = small_base()
        got = tx.transfer_layers(base, tx.TransferPlan(1, 2), seed=3,
                                 output_activation="softplus")
        assert got.activations[-1] == "softplus"
        assert got.fingerprint == base.fingerprint


@pytest.fixture(scope="module")
def tiny_film_dataset():
    return generate_dataset(TaskSpec(kind="film", layer_count=4), 150, seed=31)


QUICK = dict(epochs=25, batch_size=16, patience=25, seed=11)


class TestExperiments:
    def test_self_transfer_helps_when_direct_learning_struggles(self, tmp_path):
        # warm-starting on the same distribution beats direct learning in the
        # scarce-data regime where direct learning sits well above convergence
        ds = generate_dataset(TaskSpec(kind="film", layer_count=8), 200, seed=31)
        config = nn.TrainConfig(epochs=250, batch_size=32, patience=250, seed=11)
        result = tx.run_transfer_experiment(
            ds, ds, tx.TransferPlan(1, 6), config,
            seeds=3, cache_dir=tmp_path, hidden_width=64,
        )
        assert result.transfer_mean <= result.direct_mean

    def test_baseline_parity_same_seed_means_shared_fresh_layers(self, tiny_film_dataset, tmp_path):
        # the empty plan with the direct seed reproduces the direct run exactly
        config = nn.TrainConfig(**QUICK)
        result = tx.run_transfer_experiment(
            tiny_film_dataset, tiny_film_dataset, tx.TransferPlan(0, 0), config,
            seeds=1, cache_dir=tmp_path, hidden_width=16,
        )
        assert result.transfer_errors == result.direct_errors
        assert result.reduction == 0.0

    def test_cached_run_skips_retraining(self, tiny_film_dataset, tmp_path, monkeypatch):
        config = nn.TrainConfig(**QUICK)
        model = nn.init_network(
            (16, 16, 16, 16, 16, 16, 16, 200), SMALL_ACTS, seed=0
        )
        first = tx.cached_run(tiny_film_dataset, config, model,
                              {"scheme": "direct", "seed": 11}, tmp_path)

        def boom(*args, **kwargs):
            raise AssertionError("train() called despite cache hit")

        monkeypatch.setattr(tx, "train", boom)
        second = tx.cached_run(tiny_film_dataset, config, model,
                               {"scheme": "direct", "seed": 11}, tmp_path)
        assert first == second

    def test_grid_structure_and_flags(self, tiny_film_dataset, tmp_path):
        config = nn.TrainConfig(epochs=2, batch_size=32, patience=5, seed=1)
        source_cfg = nn.TrainConfig(epochs=3, batch_size=32, patience=5, seed=1)
        base, key = tx.load_or_train_base(
            tiny_film_dataset, source_cfg, tmp_path, hidden_width=16
        )
        cells, direct = tx.grid_search_transfer(
            base, key, tiny_film_dataset, config, seeds=1, cache_dir=tmp_path
        )
        assert len(cells) == 21
        direct_mean = float(np.mean(direct))
        for cell in cells:
            assert cell.status == "ok"
            assert 1 <= cell.n1 <= cell.n2 <= 6
            assert cell.negative_transfer == (cell.mean > direct_mean)
            assert cell.reduction == pytest.approx(
                (direct_mean - cell.mean) / direct_mean
            )

    def test_basenet_cache_reused(self, tiny_film_dataset, tmp_path, monkeypatch):
        config = nn.TrainConfig(**QUICK)
        _, key1 = tx.load_or_train_base(tiny_film_dataset, config, tmp_path, hidden_width=16)

        def boom(*args, **kwargs):
            raise AssertionError("basenet retrained despite cache")

        monkeypatch.setattr(tx, "train", boom)
        model, key2 = tx.load_or_train_base(tiny_film_dataset, config, tmp_path, hidden_width=16)
        assert key1 == key2
        assert model.provenance["init"] == "direct"
