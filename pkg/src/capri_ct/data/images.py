"""Image decode, resize and augmentation.

Images are grayscale 8- or 16-bit PNGs. Preprocessing scales intensities
by the dtype maximum into [0, 1] and resizes bilinearly to the square
model input size. Augmentation is restricted to right-angle rotations and
axis flips, which leave the circular-hole phantom label-invariant.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from ..errors import UndecodableImage

DEFAULT_INPUT_SIZE = 128


def decode_grayscale(image_file) -> np.ndarray:
    """Decode a grayscale PNG to float32 in [0, 1]."""
    try:
        with Image.open(image_file) as img:
            arr = np.asarray(img)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise UndecodableImage(image_file, str(exc))
    if arr.ndim == 3:
        arr = arr[..., 0]
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype in (np.uint16, np.int32):
        scale = 65535.0
    else:
        raise UndecodableImage(image_file, f"unsupported dtype {arr.dtype}")
    return arr.astype(np.float32) / scale


def preprocess(image_file, target_size: int = DEFAULT_INPUT_SIZE) -> torch.Tensor:
    """(1, target_size, target_size) float tensor with values in [0, 1]."""
    arr = decode_grayscale(image_file)
    tensor = torch.from_numpy(arr)[None, None, :, :]
    resized = F.interpolate(
        tensor, size=(target_size, target_size), mode="bilinear", align_corners=False
    )
    return resized[0].clamp_(0.0, 1.0)


def augment(image: torch.Tensor, rng_seed: int) -> torch.Tensor:
    """Randomly rotate by k*90 degrees and flip along either axis.

    The subset of operations is sampled independently per seed; the output
    shape and value range match the input exactly.
    """
    rng = np.random.default_rng(rng_seed)
    k = int(rng.integers(0, 4))
    hflip = bool(rng.integers(0, 2))
    vflip = bool(rng.integers(0, 2))
    out = image
    if k:
        out = torch.rot90(out, k, dims=(-2, -1))
    if hflip:
        out = torch.flip(out, dims=(-1,))
    if vflip:
        out = torch.flip(out, dims=(-2,))
    return out.contiguous()
