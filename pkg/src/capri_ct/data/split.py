"""Stratified train/validation split and extreme-SNR sample weighting.

Records are binned into SNR quantiles by rank; within each bin the train
fraction is met with largest-remainder rounding so the global split is
exact and every bin deviates by at most one record. Rare extreme-SNR
records (outer quantile tails) are duplicated and given boosted sampling
weights to counter label imbalance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import TooFewRecords
from .catalog import ScanCatalog


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    n_quantiles: int = 10
    seed: int = 0
    extreme_quantile: float = 0.05
    extreme_dup_factor: int = 2
    extreme_weight_boost: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.n_quantiles < 1:
            raise ValueError("n_quantiles must be positive")
        if not 0.0 < self.extreme_quantile < 0.5:
            raise ValueError("extreme_quantile must be in (0, 0.5)")
        if self.extreme_dup_factor < 1:
            raise ValueError("extreme_dup_factor must be >= 1")
        if self.extreme_weight_boost <= 0.0:
            raise ValueError("extreme_weight_boost must be positive")


def _quantile_bins(snr: np.ndarray, n_bins: int) -> List[np.ndarray]:
    """Equal-size rank bins over SNR (ties broken by original index)."""
    order = np.argsort(snr, kind="stable")
    return [chunk for chunk in np.array_split(order, n_bins) if len(chunk)]


def stratified_split(
    catalog: ScanCatalog, spec: SplitSpec
) -> Tuple[List[int], List[int]]:
    """Disjoint, exhaustive (train, val) index lists, deterministic per seed."""
    n = len(catalog)
    if n == 0 or spec.n_quantiles > n:
        raise TooFewRecords(
            f"{n} records cannot be stratified into {spec.n_quantiles} quantiles"
        )
    snr = np.asarray(catalog.snr_values(), dtype=float)
    bins = _quantile_bins(snr, spec.n_quantiles)

    # Largest-remainder apportionment of train slots across bins.
    exact = [spec.train_fraction * len(b) for b in bins]
    base = [int(np.floor(e)) for e in exact]
    total_train = int(round(spec.train_fraction * n))
    leftover = total_train - sum(base)
    remainders = sorted(
        range(len(bins)), key=lambda i: (-(exact[i] - base[i]), i)
    )
    counts = list(base)
    for i in remainders[:max(leftover, 0)]:
        counts[i] += 1

    rng = np.random.default_rng(spec.seed)
    train: List[int] = []
    val: List[int] = []
    for members, n_train in zip(bins, counts):
        shuffled = members[rng.permutation(len(members))]
        train.extend(int(i) for i in shuffled[:n_train])
        val.extend(int(i) for i in shuffled[n_train:])
    return sorted(train), sorted(val)


def sample_weights(
    snr: Sequence[float], spec: SplitSpec
) -> Tuple[List[int], np.ndarray]:
    """Expanded index list plus per-entry positive sampling weights.

    Records strictly below the extreme_quantile quantile or strictly above
    the (1 - extreme_quantile) quantile get weight ``extreme_weight_boost``
    and appear ``extreme_dup_factor`` times; all others weight 1, once.
    When all SNR values coincide the quantile band is empty and the
    expansion is the identity.
    """
    snr = np.asarray(snr, dtype=float)
    if len(snr) == 0:
        raise TooFewRecords("cannot weight an empty training set")
    lo = float(np.quantile(snr, spec.extreme_quantile))
    hi = float(np.quantile(snr, 1.0 - spec.extreme_quantile))
    indices: List[int] = []
    weights: List[float] = []
    for idx, value in enumerate(snr):
        extreme = value < lo or value > hi
        copies = spec.extreme_dup_factor if extreme else 1
        weight = spec.extreme_weight_boost if extreme else 1.0
        for _ in range(copies):
            indices.append(idx)
            weights.append(weight)
    return indices, np.asarray(weights, dtype=float)
