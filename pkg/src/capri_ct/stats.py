"""Nonparametric comparison tests and model-analysis statistics.

Friedman and Wilcoxon signed-rank tests follow the standard conventions:
average ranks on ties (Friedman) and removal of zero differences
(Wilcoxon). The chi-square tail probability is computed locally via the
regularized upper incomplete gamma function (series expansion below the
a+1 crossover, Lentz continued fraction above it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AllZeroDifferences, DegenerateMatrix


# --- chi-square tail ---------------------------------------------------------

_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 10_000


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a,x) by series, for x < a+1."""
    if x <= 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_GAMMA_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a,x) by continued fraction, x >= a+1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a)."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_cf(a, x)


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if x <= 0.0:
        return 1.0
    return gammainc_upper(dof / 2.0, x / 2.0)


# --- score matrices ----------------------------------------------------------

@dataclass
class ScoreMatrix:
    """Subjects x treatments score table.

    ``lower_is_better`` records the orientation of the scores (e.g. MAE vs
    R^2); rank-based tests are orientation-invariant but reports use it to
    name the winning treatment.
    """

    values: np.ndarray
    treatments: Sequence[str]
    subjects: Optional[Sequence[str]] = None
    lower_is_better: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DegenerateMatrix("score matrix must be 2-dimensional")
        n, k = self.values.shape
        if n < 2 or k < 2:
            raise DegenerateMatrix(
                f"need >=2 subjects and >=2 treatments, got {n}x{k}"
            )
        if len(self.treatments) != k:
            raise DegenerateMatrix("treatment labels do not match column count")


def _average_ranks(row: np.ndarray) -> np.ndarray:
    """Ranks 1..k with ties sharing their average rank."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row), dtype=float)
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for m in range(i, j + 1):
            ranks[order[m]] = avg
        i = j + 1
    return ranks


@dataclass
class FriedmanResult:
    chi2: float
    p: float
    dof: int
    mean_ranks: np.ndarray


def friedman_test(scores: ScoreMatrix) -> FriedmanResult:
    """Friedman rank test over a subjects x treatments score matrix.

    chi2 = 12/(n*k*(k+1)) * sum_j R_j^2 - 3*n*(k+1) where R_j is the rank
    sum of treatment j; p from the chi-square upper tail with k-1 dof.
    """
    n, k = scores.values.shape
    rank_sums = np.zeros(k, dtype=float)
    for row in scores.values:
        rank_sums += _average_ranks(row)
    chi2 = 12.0 * float(np.sum(rank_sums**2)) / (n * k * (k + 1)) - 3.0 * n * (k + 1)
    chi2 = max(chi2, 0.0)
    p = chi2_sf(chi2, k - 1) if chi2 > 0.0 else 1.0
    return FriedmanResult(chi2=chi2, p=p, dof=k - 1, mean_ranks=rank_sums / n)


# --- Wilcoxon signed rank ------------------------------------------------------

_EXACT_LIMIT = 20


@dataclass
class WilcoxonResult:
    statistic: float
    p: float
    n_used: int
    exact: bool


def _signed_rank_distribution(double_ranks: Sequence[int]) -> np.ndarray:
    """Counts of each achievable 2*W+ value over all sign patterns.

    Ranks are doubled so tied (half-integer) average ranks become integers;
    the returned array c satisfies sum(c) = 2^n.
    """
    total = sum(double_ranks)
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in double_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(
    a: Sequence[float],
    b: Sequence[float],
    alternative: str = "two-sided",
) -> WilcoxonResult:
    """Wilcoxon signed-rank test for paired samples.

    Zero differences are dropped. The statistic is the smaller of the
    positive/negative rank sums. For n <= 20 the p-value is exact over all
    2^n sign patterns; beyond that a normal approximation with tie
    correction and continuity correction is used.

    ``alternative``: 'two-sided', 'greater' (a tends to exceed b) or 'less'.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative: {alternative!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 1:
        raise ValueError("samples must be equal-length 1-d sequences")
    d = a - b
    d = d[d != 0.0]
    if len(d) == 0:
        raise AllZeroDifferences("all paired differences are zero")
    n = len(d)
    ranks = _average_ranks(np.abs(d))
    w_plus = float(np.sum(ranks[d > 0]))
    w_minus = float(np.sum(ranks[d < 0]))
    statistic = min(w_plus, w_minus)

    if n <= _EXACT_LIMIT:
        double_ranks = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_distribution(double_ranks)
        denom = 2.0**n
        dw_plus = int(round(2 * w_plus))
        if alternative == "greater":
            p = float(np.sum(counts[dw_plus:])) / denom
        elif alternative == "less":
            p = float(np.sum(counts[: dw_plus + 1])) / denom
        else:
            d_stat = int(round(2 * statistic))
            lower = float(np.sum(counts[: d_stat + 1])) / denom
            total = len(counts) - 1
            upper = float(np.sum(counts[total - d_stat:])) / denom
            p = min(1.0, lower + upper)
        return WilcoxonResult(statistic=statistic, p=p, n_used=n, exact=True)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    sd = math.sqrt(var)

    def _sf(z: float) -> float:
        return 0.5 * math.erfc(z / math.sqrt(2.0))

    if alternative == "greater":
        z = (w_plus - mean - 0.5) / sd
        p = _sf(z)
    elif alternative == "less":
        z = (w_plus - mean + 0.5) / sd
        p = 1.0 - _sf(z)
    else:
        z = (statistic - mean + 0.5) / sd
        p = min(1.0, 2.0 * (1.0 - _sf(z)))
    return WilcoxonResult(statistic=statistic, p=p, n_used=n, exact=False)


# --- correlation analysis ------------------------------------------------------

@dataclass
class LatentCorrelationReport:
    """Per-latent-dimension Pearson r vs SNR plus categorical associations.

    ``latent_r`` maps latent dimension index -> r, sorted by |r| descending;
    dimensions with zero variance are absent. ``param_eta`` maps each
    categorical field to its correlation ratio with SNR.
    """

    latent_r: list = field(default_factory=list)
    param_eta: dict = field(default_factory=dict)


def pearson_r(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """Pearson correlation; None when either side is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx = x - x.mean()
    sy = y - y.mean()
    nx = float(np.sqrt(np.sum(sx**2)))
    ny = float(np.sqrt(np.sum(sy**2)))
    if nx == 0.0 or ny == 0.0:
        return None
    return float(np.dot(sx, sy) / (nx * ny))


def correlation_ratio(levels: np.ndarray, y: np.ndarray) -> float:
    """Correlation ratio eta of a categorical variable against y."""
    y = np.asarray(y, dtype=float)
    ss_total = float(np.sum((y - y.mean()) ** 2))
    if ss_total == 0.0:
        return 0.0
    ss_between = 0.0
    for level in np.unique(levels):
        group = y[levels == level]
        ss_between += len(group) * (group.mean() - y.mean()) ** 2
    return math.sqrt(ss_between / ss_total)


def latent_correlation(model, dataset) -> LatentCorrelationReport:
    """Correlate deterministic latent means with observed SNR.

    Requires >=3 records. Returns Pearson r per latent dimension (constant
    dimensions omitted) sorted by |r| descending, and the correlation ratio
    of each categorical acquisition field against SNR.
    """
    import torch

    if len(dataset) < 3:
        raise DegenerateMatrix("need at least 3 records for correlation analysis")
    model.eval()
    mus = []
    with torch.no_grad():
        for start in range(0, len(dataset), 64):
            images, params, _ = dataset.batch(start, min(start + 64, len(dataset)))
            posterior = model.encode(images, params)
            mus.append(posterior.mu.cpu().numpy())
    mu = np.concatenate(mus, axis=0)
    snr = dataset.snr_values()

    entries = []
    for dim in range(mu.shape[1]):
        r = pearson_r(mu[:, dim], snr)
        if r is not None:
            entries.append((dim, r))
    entries.sort(key=lambda item: abs(item[1]), reverse=True)

    etas = {}
    for fname in dataset.field_names():
        etas[fname] = correlation_ratio(dataset.field_indices(fname), snr)
    return LatentCorrelationReport(latent_r=entries, param_eta=etas)


# --- ablation runner -----------------------------------------------------------

@dataclass(frozen=True)
class AblationVariant:
    """One row of an ablation study: which metadata fields stay in the model.

    The image pathway is always present; ``add_noise_field`` appends a
    uniformly random categorical input with its own embedding to probe
    robustness against causally inert metadata.
    """

    name: str
    fields: tuple
    add_noise_field: bool = False

    def __post_init__(self):
        allowed = {"voltage", "current", "agent"}
        if not set(self.fields) <= allowed:
            raise ValueError(f"unknown fields in variant {self.name}: {self.fields}")


def default_variants() -> list:
    """The standard six-variant ablation grid."""
    return [
        AblationVariant("image+v,t,a", ("voltage", "current", "agent")),
        AblationVariant("image+v,t,a+noise", ("voltage", "current", "agent"), True),
        AblationVariant("image+v,a", ("voltage", "agent")),
        AblationVariant("image+t,a", ("current", "agent")),
        AblationVariant("image-only", ()),
        AblationVariant("image+v,t", ("voltage", "current")),
    ]


def run_ablation(variants, train_set, val_set, model_config, train_config):
    """Train one model per variant (same seed) and tabulate metrics.

    Excluded embeddings are removed from the architecture, both on the
    encoder fusion path and the decoder input; the model shrinks rather
    than seeing zeroed columns.
    """
    from .training import evaluate, train_model

    names = [v.name for v in variants]
    if len(set(names)) != len(names):
        raise ValueError("ablation variant names must be unique")

    rows = []
    for variant in variants:
        cfg = model_config.with_fields(variant.fields, noise_field=variant.add_noise_field)
        tr = train_set.restrict_fields(variant.fields)
        va = val_set.restrict_fields(variant.fields)
        if variant.add_noise_field:
            tr = tr.with_noise_field(cfg.noise_levels, seed=train_config.seed)
            va = va.with_noise_field(cfg.noise_levels, seed=train_config.seed + 1)
        trained = train_model(tr, va, train_config, model_config=cfg)
        metrics = evaluate(trained.net, va)
        rows.append(
            {
                "name": variant.name,
                "fields": variant.fields,
                "noise_field": variant.add_noise_field,
                "mae": metrics.mae,
                "rmse": metrics.rmse,
                "r2": metrics.r2,
            }
        )
    return rows


def format_ablation_table(rows) -> str:
    """Plain-text table of an ablation run, one line per variant."""
    header = f"{'variant':<24} {'MAE':>12} {'RMSE':>12} {'R2':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['name']:<24} {row['mae']:>12.4f} {row['rmse']:>12.4f} {row['r2']:>8.4f}"
        )
    return "\n".join(lines)
