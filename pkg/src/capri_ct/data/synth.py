"""Synthetic phantom dataset with a known causal mechanism.

Ground-truth mechanism (documented so tests can verify causal behavior):

    g(v, t, a) = AGENT_EFFECT[a] + VOLTAGE_EFFECT[v] + CURRENT_EFFECT[t]

with effects (unitless SNR):

    agent:   BiNPs-50nm -120, BiNPs-100nm 0, Iodine +120
    voltage: 80 kVp -24, 100 kVp -8, 120 kVp +8, 140 kVp +24
    current: 215 mAs -15, 430 mAs +15

The agent carries ~94.6% of the label variance under uniform cell
coverage, voltage ~3.2%, current ~2.2%: the agent is the dominant cause.

Images are a grid of discs (mimicking a drilled phantom slab). Disc
intensity is base + intensity_gain * g/|g|_max plus Gaussian pixel noise
with std ``noise_level``. Disc bases sit exactly on 8-bit quantization
centers and the default gain is below half a quantization step, so at
zero pixel noise the written PNGs are identical across parameter cells:
the image shows the phantom but offers no shortcut to the label. Raise
``intensity_gain`` to study image-informative regimes.

Labels are written as snr = g + 60 * noise_level * uniform(-1, 1), so at
noise_level 0 the label equals g exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .catalog import ScanCatalog, load_catalog

AGENT_EFFECT = {"BiNPs-50nm": -120.0, "BiNPs-100nm": 0.0, "Iodine": 120.0}
VOLTAGE_EFFECT = {80: -24.0, 100: -8.0, 120: 8.0, 140: 24.0}
CURRENT_EFFECT = {215: -15.0, 430: 15.0}

G_NORM = 159.0  # max |g| over the level grid
LABEL_NOISE_SCALE = 60.0

_DISC_BASE_STEPS = (130, 140, 150)  # exact uint8 levels
_BACKGROUND_STEP = 38


def oracle_label(voltage: int, current: int, agent: str) -> float:
    """The closed-form mechanism g(v, t, a)."""
    return AGENT_EFFECT[agent] + VOLTAGE_EFFECT[voltage] + CURRENT_EFFECT[current]


@dataclass(frozen=True)
class SynthConfig:
    n_records: int = 240
    grid: int = 13
    noise_level: float = 0.05
    seed: int = 0
    image_size: int = 256
    intensity_gain: float = 0.0015  # below half an 8-bit quantization step

    def __post_init__(self):
        if self.n_records < 1:
            raise ValueError("n_records must be positive")
        if self.grid < 1:
            raise ValueError("grid must be positive")
        if self.noise_level < 0:
            raise ValueError("noise_level must be nonnegative")


def _disc_masks(grid: int, size: int):
    """Boolean masks and base intensities for the disc grid."""
    step = size / (grid + 1)
    yy, xx = np.mgrid[0:size, 0:size]
    masks = []
    for row in range(grid):
        for col in range(grid):
            cy = (row + 1) * step
            cx = (col + 1) * step
            # radii cycle between 0.22 and 0.38 of the pitch, like the
            # varied hole diameters of a drilled phantom
            radius = step * (0.22 + 0.16 * (((row * grid + col) % 4) / 3.0))
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
            base = _DISC_BASE_STEPS[(row + col) % len(_DISC_BASE_STEPS)]
            masks.append((mask, base))
    return masks


def _render(masks, size: int, g_value: float, gain: float, rng) -> np.ndarray:
    canvas = np.full((size, size), _BACKGROUND_STEP / 255.0, dtype=np.float64)
    shift = gain * g_value / G_NORM
    for mask, base in masks:
        canvas[mask] = base / 255.0 + shift
    noise_std = rng.normal(0.0, 1.0, size=(size, size))
    return canvas, noise_std


def synth_generate(config: SynthConfig, out_dir) -> ScanCatalog:
    """Write images/ plus metadata.csv and return the loaded catalog.

    Deterministic: a fixed seed yields byte-identical output trees. Cells
    are assigned round-robin over the full level grid, so all 24 cells are
    present whenever n_records >= 24.
    """
    out = Path(out_dir)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    cells = list(
        itertools.product(
            sorted(VOLTAGE_EFFECT), sorted(CURRENT_EFFECT), sorted(AGENT_EFFECT)
        )
    )
    masks = _disc_masks(config.grid, config.image_size)
    rng = np.random.default_rng(config.seed)

    rows = ["filename,voltage,current,agent,snr"]
    for idx in range(config.n_records):
        voltage, current, agent = cells[idx % len(cells)]
        g_value = oracle_label(voltage, current, agent)
        canvas, noise = _render(masks, config.image_size, g_value, config.intensity_gain, rng)
        pixels = canvas + config.noise_level * noise
        quantized = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
        filename = f"images/synth_{idx:05d}.png"
        Image.fromarray(quantized, mode="L").save(out / filename)

        label_noise = LABEL_NOISE_SCALE * config.noise_level * rng.uniform(-1.0, 1.0)
        snr = g_value + label_noise
        rows.append(f"{filename},{voltage},{current},{agent},{snr!r}")

    metadata = out / "metadata.csv"
    metadata.write_text("\n".join(rows) + "\n")
    return load_catalog(out, metadata)
