import json
import math

import numpy as np
import pytest
import torch

from capri_ct.data import SplitSpec
from capri_ct.errors import ConstantTargets, EmptyDataset
from capri_ct.model import ModelConfig
from capri_ct.training import (
    Ensemble,
    Metrics,
    TrainConfig,
    TrainedModel,
    aggregate,
    evaluate,
    history_ndjson,
    regression_metrics,
    train_ensemble,
    train_model,
)


def brute_force_metrics(y, y_hat):
    """Independent plain-Python reimplementation of the three formulas."""
    n = len(y)
    mae = sum(abs(a - b) for a, b in zip(y, y_hat)) / n
    rmse = math.sqrt(sum((a - b) ** 2 for a, b in zip(y, y_hat)) / n)
    mean = sum(y) / n
    ss_res = sum((a - b) ** 2 for a, b in zip(y, y_hat))
    ss_tot = sum((a - mean) ** 2 for a in y)
    r2 = 1.0 - ss_res / ss_tot
    return mae, rmse, r2


class TestMetrics:
    def test_exact_prediction(self):
        m = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (m.mae, m.rmse, m.r2) == (0.0, 0.0, 1.0)

    def test_mean_prediction_gives_zero_r2(self):
        y = [1.0, 2.0, 3.0, 6.0]
        mean = sum(y) / len(y)
        m = regression_metrics(y, [mean] * 4)
        assert m.r2 == pytest.approx(0.0)

    def test_constant_targets_reported_as_error_with_partials(self):
        with pytest.raises(ConstantTargets) as exc:
            regression_metrics([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0])
        assert exc.value.mae == pytest.approx(1.0)
        assert exc.value.rmse == pytest.approx(1.0)

    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            y = rng.normal(size=50) * 100
            y_hat = y + rng.normal(size=50) * 10
            m = regression_metrics(y, y_hat)
            mae, rmse, r2 = brute_force_metrics(list(y), list(y_hat))
            assert m.mae == pytest.approx(mae, rel=1e-12)
            assert m.rmse == pytest.approx(rmse, rel=1e-12)
            assert m.r2 == pytest.approx(r2, rel=1e-12)

    def test_rmse_ge_mae(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            y = rng.normal(size=30)
            y_hat = rng.normal(size=30)
            m = regression_metrics(y, y_hat)
            assert m.rmse >= m.mae - 1e-12

    def test_rmse_squared_identity(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=200) * 50
        y_hat = y + rng.normal(size=200) * 5
        m = regression_metrics(y, y_hat)
        assert m.rmse**2 * len(y) == pytest.approx(
            float(np.sum((y - y_hat) ** 2)), rel=1e-9
        )

    def test_empty_rejected(self):
        with pytest.raises(EmptyDataset):
            regression_metrics([], [])

    def test_shared_affine_rescale_preserves_member_ranking(self):
        # a common units change (y, y_hat) -> (a*y+b, a*y_hat+b) leaves R^2
        # invariant, so best-member selection is argmax-stable under it
        rng = np.random.default_rng(11)
        y = rng.normal(size=40) * 30
        members = [y + rng.normal(size=40) * s for s in (2.0, 8.0, 5.0)]
        base = [regression_metrics(y, m).r2 for m in members]
        a, b = 3.7, -12.0
        rescaled = [regression_metrics(a * y + b, a * m + b).r2 for m in members]
        for r_base, r_scaled in zip(base, rescaled):
            assert r_scaled == pytest.approx(r_base, rel=1e-12)
        assert np.argsort(base).tolist() == np.argsort(rescaled).tolist()


class TestTrainModel:
    def test_fits_noiseless_synthetic(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=30, batch_size=16, learning_rate=3e-3,
            early_stop_patience=30, seed=1,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        trained = train_model(train_set, val_set, config, small_model_config)
        assert trained.metrics.r2 >= 0.95

    def test_same_seed_identical_metrics(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=4, batch_size=16, seed=13,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        first = train_model(train_set, val_set, config, small_model_config)
        second = train_model(train_set, val_set, config, small_model_config)
        assert first.metrics.as_dict() == second.metrics.as_dict()
        assert first.history == second.history

    def test_early_stop_contract(self, synth_sets, small_model_config):
        # with patience 0, training halts at the first non-improving epoch
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=25, batch_size=16, early_stop_patience=0, seed=2,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        trained = train_model(train_set, val_set, config, small_model_config)
        r2s = [row["val_r2"] for row in trained.history]
        best_so_far = -math.inf
        for i, r2 in enumerate(r2s):
            if r2 <= best_so_far:
                assert i == len(r2s) - 1, "run continued past a non-improving epoch"
            best_so_far = max(best_so_far, r2)

    def test_best_weights_retained(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=8, batch_size=16, seed=3,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        trained = train_model(train_set, val_set, config, small_model_config)
        best_logged = max(row["val_r2"] for row in trained.history)
        assert trained.metrics.r2 == pytest.approx(best_logged)
        # re-evaluating the returned weights reproduces the stored metrics
        again = evaluate(trained.net, val_set)
        assert again.r2 == pytest.approx(trained.metrics.r2)

    def test_history_ndjson_schema(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=2, batch_size=16, seed=5,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        trained = train_model(train_set, val_set, config, small_model_config)
        lines = history_ndjson(trained.history).strip().splitlines()
        assert len(lines) == len(trained.history)
        row = json.loads(lines[0])
        assert set(row) == {"epoch", "train_loss", "val_mae", "val_rmse", "val_r2"}


class _ConstNet:
    """Stand-in network producing a fixed output for every record."""

    def __init__(self, value):
        self.value = value

    def eval(self):
        return self

    def __call__(self, images, params, mode="deterministic", generator=None):
        from capri_ct.model import LatentPosterior, Prediction

        n = len(images)
        mu = torch.zeros(n, 1)
        return Prediction(
            snr_hat=torch.full((n,), self.value),
            posterior=LatentPosterior(mu, mu),
            z_used=mu,
        )


def _fake_member(value, r2=0.5):
    return TrainedModel(
        net=_ConstNet(value),
        model_config=ModelConfig(latent_dim=1, input_size=32),
        train_config=TrainConfig(seed=0),
        metrics=Metrics(mae=1.0, rmse=1.0, r2=r2),
        history=[],
        vocab=None,
        vocab_sizes={},
    )


class TestEnsemble:
    def test_k_must_match_seed_count(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        with pytest.raises(ValueError):
            train_ensemble(2, train_set, val_set, TrainConfig(), [1], small_model_config)

    def test_duplicate_seeds_rejected(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        with pytest.raises(ValueError):
            train_ensemble(2, train_set, val_set, TrainConfig(), [1, 1], small_model_config)

    def test_k1_best_index_zero(self, synth_sets, small_model_config):
        train_set, val_set = synth_sets
        config = TrainConfig(
            epochs=2, batch_size=16, seed=0,
            split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
        )
        ensemble = train_ensemble(1, train_set, val_set, config, [4], small_model_config)
        assert ensemble.best_index == 0
        assert len(ensemble) == 1

    def test_best_index_argmax_with_tie_to_lowest(self):
        members = [_fake_member(1.0, r2=0.7), _fake_member(2.0, r2=0.9), _fake_member(3.0, r2=0.9)]
        best = max(range(3), key=lambda i: (members[i].metrics.r2, -i))
        assert best == 1

    def test_aggregate_k1_zero_std(self, synth_sets):
        _, val_set = synth_sets
        ensemble = Ensemble(members=[_fake_member(5.0)], best_index=0)
        mean, std, _ = aggregate(ensemble, val_set)
        assert np.all(std == 0.0)
        assert np.all(mean == 5.0)

    def test_aggregate_identical_members(self, synth_sets):
        _, val_set = synth_sets
        ensemble = Ensemble(members=[_fake_member(2.0), _fake_member(2.0)], best_index=0)
        mean, std, _ = aggregate(ensemble, val_set)
        assert np.all(std == 0.0)
        assert np.all(mean == 2.0)

    def test_aggregate_hand_computed_population_std(self, synth_sets):
        # members predicting 1 and 3: mean 2, population std 1
        _, val_set = synth_sets
        ensemble = Ensemble(members=[_fake_member(1.0), _fake_member(3.0)], best_index=0)
        mean, std, _ = aggregate(ensemble, val_set)
        assert np.allclose(mean, 2.0)
        assert np.allclose(std, 1.0)

    def test_aggregate_std_zero_iff_members_agree(self, synth_sets):
        _, val_set = synth_sets
        ensemble = Ensemble(
            members=[_fake_member(1.0), _fake_member(1.0 + 1e-6)], best_index=0
        )
        _, std, _ = aggregate(ensemble, val_set)
        assert np.all(std > 0.0)
