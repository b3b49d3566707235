import numpy as np
import pytest
import torch

from capri_ct.data import SplitSpec, SynthConfig, TensorScanSet, stratified_split, synth_generate
from capri_ct.model import ModelConfig
from capri_ct.training import TrainConfig, train_model

torch.set_num_threads(2)

# one line per acceptance criterion, echoed after the run summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checklist")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """Small noiseless synthetic dataset shared across tests."""
    out = tmp_path_factory.mktemp("synth")
    config = SynthConfig(n_records=48, grid=5, noise_level=0.0, seed=11, image_size=64)
    synth_generate(config, out)
    return out


@pytest.fixture(scope="session")
def synth_catalog(synth_dir):
    from capri_ct.data import load_catalog

    return load_catalog(synth_dir, synth_dir / "metadata.csv")


@pytest.fixture(scope="session")
def small_model_config():
    return ModelConfig(latent_dim=8, input_size=32, dropout_rate=0.1, decoder_hidden=(32, 16))


@pytest.fixture(scope="session")
def synth_sets(synth_catalog):
    spec = SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3)
    train_idx, val_idx = stratified_split(synth_catalog, spec)
    train_set = TensorScanSet.from_catalog(synth_catalog, train_idx, input_size=32)
    val_set = TensorScanSet.from_catalog(synth_catalog, val_idx, input_size=32)
    return train_set, val_set


@pytest.fixture(scope="session")
def trained_small(synth_sets, small_model_config):
    """One quickly trained model reused by checkpoint/causal/service tests."""
    train_set, val_set = synth_sets
    config = TrainConfig(
        epochs=30,
        batch_size=16,
        learning_rate=3e-3,
        early_stop_patience=30,
        seed=7,
        split=SplitSpec(train_fraction=0.75, n_quantiles=4, seed=3),
    )
    return train_model(train_set, val_set, config, small_model_config)


def assert_close(a, b, rtol=1e-6, atol=1e-8):
    assert np.allclose(a, b, rtol=rtol, atol=atol), f"{a} != {b}"
