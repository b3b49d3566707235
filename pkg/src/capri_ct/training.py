"""Training loop, evaluation metrics and the seed-varied ensemble.

Each run is fully determined by its seed: weight initialization, sampler
draws and augmentation all derive from it. Validation R^2 drives both
early stopping and best-epoch weight retention, and the best ensemble
member is the one with the highest validation R^2 (ties break to the
lowest index).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from .data.split import SplitSpec, sample_weights
from .data.tensorset import TensorScanSet, derive_seed
from .errors import ConstantTargets, EmptyDataset, EnsembleMemberFailed, NonFiniteLoss
from .model import ModelConfig, SnrVae, loss_terms


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    early_stop_patience: int = 10
    seed: int = 0
    beta: float = 1e-3
    beta_warmup_fraction: float = 0.1
    split: SplitSpec = dc_field(default_factory=SplitSpec)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.early_stop_patience < 0:
            raise ValueError("early_stop_patience must be >= 0")


@dataclass
class Metrics:
    mae: float
    rmse: float
    r2: float

    def as_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "r2": self.r2}


def regression_metrics(y: Sequence[float], y_hat: Sequence[float]) -> Metrics:
    """MAE, RMSE and the coefficient of determination.

    Raises ConstantTargets (carrying mae/rmse) when every target is equal,
    since R^2 divides by the target variance.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) == 0:
        raise EmptyDataset("metrics need equal-length nonempty 1-d arrays")
    err = y - y_hat
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err**2)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTargets(mae=mae, rmse=rmse)
    r2 = 1.0 - float(np.sum(err**2)) / ss_tot
    return Metrics(mae=mae, rmse=rmse, r2=r2)


def predict_dataset(net: SnrVae, dataset: TensorScanSet, batch_size: int = 64) -> np.ndarray:
    """Deterministic predictions for every record, in dataset order."""
    net.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(dataset), batch_size):
            images, params, _ = dataset.batch(start, min(start + batch_size, len(dataset)))
            pred = net(images, params, mode="deterministic")
            outputs.append(pred.snr_hat.cpu().numpy())
    return np.concatenate(outputs, axis=0)


def evaluate(net: SnrVae, dataset: TensorScanSet) -> Metrics:
    return regression_metrics(dataset.snr_values(), predict_dataset(net, dataset))


@dataclass
class TrainedModel:
    net: SnrVae
    model_config: ModelConfig
    train_config: TrainConfig
    metrics: Metrics
    history: List[dict]
    vocab: object  # data.Vocab; raw level values per field
    vocab_sizes: dict


@dataclass
class Ensemble:
    members: List[TrainedModel]
    best_index: int

    @property
    def best(self) -> TrainedModel:
        return self.members[self.best_index]

    def __len__(self) -> int:
        return len(self.members)


def _epoch_batches(
    order: Sequence[int], batch_size: int
) -> List[List[int]]:
    batches = [
        list(order[i : i + batch_size]) for i in range(0, len(order), batch_size)
    ]
    # batch-norm cannot normalize a single-sample training batch
    if batches and len(batches[-1]) == 1 and len(batches) > 1:
        batches[-2].extend(batches[-1])
        batches.pop()
    return batches


def train_model(
    train_set: TensorScanSet,
    val_set: TensorScanSet,
    config: TrainConfig,
    model_config: Optional[ModelConfig] = None,
) -> TrainedModel:
    """Train one model; retains the weights of the best validation epoch.

    Minibatches are drawn by a weighted sampler over the duplicated
    extreme-SNR expansion. Early stopping fires once validation R^2 has
    not improved for ``early_stop_patience`` consecutive epochs.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise EmptyDataset("train and validation sets must be nonempty")
    if model_config is None:
        model_config = ModelConfig(fields=train_set.fields)

    torch.manual_seed(config.seed)
    net = SnrVae(model_config, train_set.vocab_sizes())
    train_snr = train_set.snr_values()
    net.set_target_stats(float(np.mean(train_snr)), float(np.std(train_snr)))
    if config.optimizer != "adam":
        raise ValueError(f"unsupported optimizer: {config.optimizer!r}")
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)

    expanded, weights = sample_weights(train_set.snr_values(), config.split)
    weight_tensor = torch.as_tensor(weights, dtype=torch.double)
    sampler_gen = torch.Generator().manual_seed(derive_seed(config.seed, "sampler"))

    steps_per_epoch = max(1, math.ceil(len(expanded) / config.batch_size))
    # shared warm-up for the KL weight and the learning rate; the ramp tames
    # Adam's early coherent steps through the wide flatten-to-latent heads
    warmup_steps = max(1, int(config.beta_warmup_fraction * config.epochs * steps_per_epoch))

    best_state = copy.deepcopy(net.state_dict())
    best_r2 = -math.inf
    best_metrics: Optional[Metrics] = None
    history: List[dict] = []
    stale = 0
    step = 0

    for epoch in range(config.epochs):
        net.train()
        draw = torch.multinomial(
            weight_tensor, len(expanded), replacement=True, generator=sampler_gen
        )
        order = [expanded[i] for i in draw.tolist()]
        epoch_loss = 0.0
        n_seen = 0
        for batch_no, batch_idx in enumerate(_epoch_batches(order, config.batch_size)):
            images, params, targets = train_set.gather(
                batch_idx, augment_seed=derive_seed(config.seed, "aug", epoch, batch_no)
            )
            eps_gen = torch.Generator().manual_seed(
                derive_seed(config.seed, "eps", epoch, batch_no)
            )
            prediction = net(images, params, mode="stochastic", generator=eps_gen)
            ramp = min(1.0, (step + 1) / warmup_steps)
            loss = loss_terms(prediction, targets, config.beta * ramp)
            optimizer.zero_grad()
            loss.total.backward()
            torch.nn.utils.clip_grad_norm_(net.parameters(), 10.0)
            for group in optimizer.param_groups:
                group["lr"] = config.learning_rate * ramp
            optimizer.step()
            epoch_loss += float(loss.total.detach()) * len(batch_idx)
            n_seen += len(batch_idx)
            step += 1

        val_metrics = evaluate(net, val_set)
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / max(n_seen, 1),
                "val_mae": val_metrics.mae,
                "val_rmse": val_metrics.rmse,
                "val_r2": val_metrics.r2,
            }
        )
        if val_metrics.r2 > best_r2:
            best_r2 = val_metrics.r2
            best_metrics = val_metrics
            best_state = copy.deepcopy(net.state_dict())
            stale = 0
        else:
            stale += 1
            if stale > config.early_stop_patience:
                break

    net.load_state_dict(best_state)
    net.eval()
    assert best_metrics is not None
    return TrainedModel(
        net=net,
        model_config=model_config,
        train_config=config,
        metrics=best_metrics,
        history=history,
        vocab=train_set.vocab,
        vocab_sizes=train_set.vocab_sizes(),
    )


def train_ensemble(
    k: int,
    train_set: TensorScanSet,
    val_set: TensorScanSet,
    base_config: TrainConfig,
    seeds: Sequence[int],
    model_config: Optional[ModelConfig] = None,
) -> Ensemble:
    """K independent runs differing only in seed; members keep seed order."""
    seeds = list(seeds)
    if k != len(seeds):
        raise ValueError(f"k={k} but {len(seeds)} seeds given")
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    members = []
    for seed in seeds:
        cfg = replace(base_config, seed=seed)
        try:
            members.append(train_model(train_set, val_set, cfg, model_config))
        except NonFiniteLoss as exc:
            raise EnsembleMemberFailed(seed, exc) from exc
    best_index = max(range(len(members)), key=lambda i: (members[i].metrics.r2, -i))
    return Ensemble(members=members, best_index=best_index)


def aggregate(
    ensemble: Ensemble, dataset: TensorScanSet
) -> Tuple[np.ndarray, np.ndarray, Metrics]:
    """Per-record mean and population std across members, plus pooled metrics."""
    if len(ensemble) == 0:
        raise EmptyDataset("ensemble has no members")
    preds = np.stack([predict_dataset(m.net, dataset) for m in ensemble.members])
    mean = preds.mean(axis=0)
    std = preds.std(axis=0)  # population std: well-defined for k=1
    pooled = regression_metrics(dataset.snr_values(), mean)
    return mean, std, pooled


def history_ndjson(history: List[dict]) -> str:
    """Epoch history as newline-delimited JSON for external plotting."""
    return "\n".join(json.dumps(row) for row in history) + "\n"
