"""Conditional VAE regressor: conv image encoder fused with categorical
acquisition-parameter embeddings, a reparameterized latent, and an MLP
regression decoder predicting SNR.

There is no image-reconstruction decoder; the latent is regularized only
by the KL term of the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import torch
import torch.nn as nn

from .errors import IndexOutOfVocab, NonFiniteLoss, ShapeMismatch

DEFAULT_EMBED_DIMS = {"voltage": 16, "current": 8, "agent": 12, "noise": 8}
DEFAULT_FIELDS = ("voltage", "current", "agent")


@dataclass(frozen=True)
class ModelConfig:
    latent_dim: int = 32
    conv_channels: Tuple[int, int, int] = (32, 64, 128)
    embed_dims: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_EMBED_DIMS))
    fields: Tuple[str, ...] = DEFAULT_FIELDS
    noise_field: bool = False
    noise_levels: int = 4
    decoder_hidden: Tuple[int, int] = (128, 64)
    dropout_rate: float = 0.2
    input_size: int = 128

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.input_size % 4 != 0:
            raise ValueError("input_size must be divisible by 4 (two stride-2 layers)")

    @property
    def active_fields(self) -> Tuple[str, ...]:
        return self.fields + (("noise",) if self.noise_field else ())

    @property
    def embed_total(self) -> int:
        return sum(self.embed_dims[f] for f in self.active_fields)

    def with_fields(self, fields: Tuple[str, ...], noise_field: bool = False) -> "ModelConfig":
        ordered = tuple(f for f in DEFAULT_FIELDS if f in fields)
        return replace(self, fields=ordered, noise_field=noise_field)


@dataclass
class LatentPosterior:
    """Diagonal-Gaussian posterior parameters, one row per record."""

    mu: torch.Tensor
    log_var: torch.Tensor

    @property
    def sigma(self) -> torch.Tensor:
        return torch.exp(0.5 * self.log_var)


@dataclass
class Prediction:
    snr_hat: torch.Tensor
    posterior: LatentPosterior
    z_used: torch.Tensor


@dataclass
class LossBreakdown:
    regression_term: torch.Tensor
    kl_term: torch.Tensor
    beta: float
    total: torch.Tensor


def reparameterize(posterior: LatentPosterior, eps: torch.Tensor) -> torch.Tensor:
    """z = mu + sigma * eps, elementwise."""
    return posterior.mu + torch.exp(0.5 * posterior.log_var) * eps


class SnrVae(nn.Module):
    """Encoder + latent sampling + regression decoder.

    The encoder runs the image through three 3x3 conv layers (channel
    depths per config, the first two stride 2, the third stride 1), each
    with batch norm and ReLU, then dropout; the flattened features are
    concatenated with the parameter embeddings and projected to the
    posterior mean and log-variance. The decoder consumes the sampled
    latent concatenated with the same embeddings through two hidden
    layers and a scalar head.
    """

    def __init__(self, config: ModelConfig, vocab_sizes: Dict[str, int]):
        super().__init__()
        self.config = config
        self.vocab_sizes = dict(vocab_sizes)
        if config.noise_field:
            self.vocab_sizes.setdefault("noise", config.noise_levels)

        self.embeddings = nn.ModuleDict()
        for fname in config.active_fields:
            if fname not in self.vocab_sizes:
                raise ValueError(f"no vocabulary size for field {fname!r}")
            self.embeddings[fname] = nn.Embedding(
                self.vocab_sizes[fname], config.embed_dims[fname]
            )

        c1, c2, c3 = config.conv_channels
        self.conv = nn.Sequential(
            nn.Conv2d(1, c1, kernel_size=3, stride=2, padding=1),
            nn.BatchNorm2d(c1),
            nn.ReLU(inplace=True),
            nn.Conv2d(c1, c2, kernel_size=3, stride=2, padding=1),
            nn.BatchNorm2d(c2),
            nn.ReLU(inplace=True),
            nn.Conv2d(c2, c3, kernel_size=3, stride=1, padding=1),
            nn.BatchNorm2d(c3),
            nn.ReLU(inplace=True),
            nn.Dropout(config.dropout_rate),
        )
        spatial = config.input_size // 4
        self.flat_dim = c3 * spatial * spatial
        fused = self.flat_dim + config.embed_total
        self.fc_mu = nn.Linear(fused, config.latent_dim)
        self.fc_log_var = nn.Linear(fused, config.latent_dim)

        h1, h2 = config.decoder_hidden
        self.decoder = nn.Sequential(
            nn.Linear(config.latent_dim + config.embed_total, h1),
            nn.ReLU(inplace=True),
            nn.Linear(h1, h2),
            nn.ReLU(inplace=True),
            nn.Linear(h2, 1),
        )
        # label standardization: the head works on a unit scale and the
        # output is mapped back, which keeps optimization independent of
        # the raw SNR magnitude. Set from the training labels.
        self.register_buffer("target_mean", torch.zeros(()))
        self.register_buffer("target_scale", torch.ones(()))

    def set_target_stats(self, mean: float, scale: float) -> None:
        self.target_mean.fill_(float(mean))
        self.target_scale.fill_(max(float(scale), 1e-8))

    # --- components ----------------------------------------------------

    def embed_params(self, params: torch.Tensor) -> torch.Tensor:
        """Concatenate embedding rows for each active field, in field order."""
        fields = self.config.active_fields
        if params.ndim != 2 or params.shape[1] != len(fields):
            raise ShapeMismatch(
                f"expected params of shape (B, {len(fields)}), got {tuple(params.shape)}"
            )
        if not fields:
            return torch.zeros(
                (params.shape[0], 0), dtype=self.fc_mu.weight.dtype,
                device=self.fc_mu.weight.device,
            )
        pieces = []
        for col, fname in enumerate(fields):
            column = params[:, col]
            size = self.vocab_sizes[fname]
            if column.numel() and (int(column.max()) >= size or int(column.min()) < 0):
                raise IndexOutOfVocab(
                    f"{fname} index out of range [0, {size}): "
                    f"{int(column.min())}..{int(column.max())}"
                )
            pieces.append(self.embeddings[fname](column))
        return torch.cat(pieces, dim=1)

    def encode(self, images: torch.Tensor, params: torch.Tensor) -> LatentPosterior:
        if images.ndim != 4 or images.shape[1] != 1:
            raise ShapeMismatch(f"expected images (B, 1, H, W), got {tuple(images.shape)}")
        if images.shape[2] != self.config.input_size or images.shape[3] != self.config.input_size:
            raise ShapeMismatch(
                f"expected {self.config.input_size}x{self.config.input_size} input, "
                f"got {images.shape[2]}x{images.shape[3]}"
            )
        features = self.conv(images).flatten(1)
        fused = torch.cat([features, self.embed_params(params)], dim=1)
        # clamp keeps sigma = exp(log_var/2) finite through early training
        log_var = self.fc_log_var(fused).clamp(min=-8.0, max=8.0)
        return LatentPosterior(mu=self.fc_mu(fused), log_var=log_var)

    def decode(self, z: torch.Tensor, params: torch.Tensor) -> torch.Tensor:
        if z.ndim != 2 or z.shape[1] != self.config.latent_dim:
            raise ShapeMismatch(
                f"expected latent of shape (B, {self.config.latent_dim}), got {tuple(z.shape)}"
            )
        joined = torch.cat([z, self.embed_params(params)], dim=1)
        return self.target_mean + self.target_scale * self.decoder(joined).squeeze(-1)

    def forward(
        self,
        images: torch.Tensor,
        params: torch.Tensor,
        mode: str = "deterministic",
        generator: Optional[torch.Generator] = None,
    ) -> Prediction:
        posterior = self.encode(images, params)
        if mode == "deterministic":
            # eps = 0 collapses the sample to the posterior mean
            z = posterior.mu
        elif mode == "stochastic":
            eps = torch.randn(
                posterior.mu.shape, generator=generator, dtype=posterior.mu.dtype
            )
            z = reparameterize(posterior, eps)
        else:
            raise ValueError(f"unknown forward mode: {mode!r}")
        return Prediction(snr_hat=self.decode(z, params), posterior=posterior, z_used=z)


def kl_to_standard_normal(posterior: LatentPosterior) -> torch.Tensor:
    """Closed-form KL(q || N(0, I)) summed over dims, averaged over the batch."""
    per_record = -0.5 * torch.sum(
        1.0 + posterior.log_var - posterior.mu**2 - torch.exp(posterior.log_var),
        dim=1,
    )
    return per_record.mean()


def loss_terms(prediction: Prediction, target_snr: torch.Tensor, beta: float) -> LossBreakdown:
    """Squared-error regression term plus beta-weighted KL regularizer.

    Raises NonFiniteLoss when the total is NaN/inf, which signals a
    diverged run that must abort.
    """
    regression = torch.mean((prediction.snr_hat - target_snr) ** 2)
    kl = kl_to_standard_normal(prediction.posterior)
    total = regression + beta * kl
    if not bool(torch.isfinite(total)):
        raise NonFiniteLoss(
            f"loss diverged: regression={float(regression)}, kl={float(kl)}"
        )
    return LossBreakdown(regression_term=regression, kl_term=kl, beta=beta, total=total)


def parameter_count(config: ModelConfig, vocab_sizes: Dict[str, int]) -> int:
    """Closed-form total trainable parameter count for a given config."""
    sizes = dict(vocab_sizes)
    if config.noise_field:
        sizes.setdefault("noise", config.noise_levels)
    total = sum(sizes[f] * config.embed_dims[f] for f in config.active_fields)

    c1, c2, c3 = config.conv_channels
    for cin, cout in ((1, c1), (c1, c2), (c2, c3)):
        total += cout * cin * 9 + cout  # 3x3 kernels + bias
        total += 2 * cout  # batch-norm affine
    spatial = config.input_size // 4
    fused = c3 * spatial * spatial + config.embed_total
    total += 2 * (fused * config.latent_dim + config.latent_dim)  # mu + log_var heads
    h1, h2 = config.decoder_hidden
    total += (config.latent_dim + config.embed_total) * h1 + h1
    total += h1 * h2 + h2
    total += h2 * 1 + 1
    return total
