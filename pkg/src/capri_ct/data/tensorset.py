"""In-memory tensor view of a catalog subset.

Images are preprocessed once and cached; metadata fields are encoded to
dense indices with the catalog vocabulary. Field subsets (for ablations)
and an injected random categorical column are derived views that share
the image storage.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Sequence, Tuple

import numpy as np
import torch

from ..errors import EmptyDataset
from .catalog import FIELD_NAMES, ScanCatalog
from .images import augment, preprocess


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary integer/string parts."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


class TensorScanSet:
    """Preprocessed images + encoded params + labels for a set of records."""

    def __init__(
        self,
        images: torch.Tensor,
        params: torch.Tensor,
        snr: torch.Tensor,
        fields: Tuple[str, ...],
        vocab,
        record_indices: Sequence[int],
    ):
        if len(images) == 0:
            raise EmptyDataset("no records in dataset")
        self.images = images
        self.params = params
        self.snr = snr
        self.fields = fields
        self.vocab = vocab
        self.record_indices = list(record_indices)

    @classmethod
    def from_catalog(
        cls,
        catalog: ScanCatalog,
        indices: Optional[Sequence[int]] = None,
        input_size: int = 128,
    ) -> "TensorScanSet":
        if indices is None:
            indices = range(len(catalog))
        indices = list(indices)
        if not indices:
            raise EmptyDataset("empty index list")
        images = torch.stack(
            [preprocess(catalog.records[i].image_path, input_size) for i in indices]
        )
        params = torch.tensor(
            [list(catalog.encode(catalog.records[i])) for i in indices],
            dtype=torch.long,
        )
        snr = torch.tensor(
            [catalog.records[i].snr for i in indices], dtype=torch.float32
        )
        return cls(images, params, snr, FIELD_NAMES, catalog.vocab, indices)

    def __len__(self) -> int:
        return len(self.images)

    # --- derived views ---------------------------------------------------

    def restrict_fields(self, fields: Sequence[str]) -> "TensorScanSet":
        """Keep only the named metadata columns (canonical field order)."""
        keep = [f for f in self.fields if f in fields]
        cols = [self.fields.index(f) for f in keep]
        params = (
            self.params[:, cols]
            if cols
            else torch.zeros((len(self), 0), dtype=torch.long)
        )
        return TensorScanSet(
            self.images, params, self.snr, tuple(keep), self.vocab, self.record_indices
        )

    def with_noise_field(self, n_levels: int, seed: int) -> "TensorScanSet":
        """Append a uniformly random categorical column named 'noise'."""
        rng = np.random.default_rng(seed)
        noise = torch.from_numpy(
            rng.integers(0, n_levels, size=len(self)).astype(np.int64)
        )
        params = torch.cat([self.params, noise[:, None]], dim=1)
        return TensorScanSet(
            self.images,
            params,
            self.snr,
            self.fields + ("noise",),
            self.vocab,
            self.record_indices,
        )

    # --- access ------------------------------------------------------------

    def batch(self, start: int, end: int):
        return self.images[start:end], self.params[start:end], self.snr[start:end]

    def gather(self, idx: Sequence[int], augment_seed: Optional[int] = None):
        """Batch for the given positions; optionally augment each image."""
        idx = list(idx)
        images = self.images[idx]
        if augment_seed is not None:
            images = torch.stack(
                [
                    augment(images[pos], derive_seed(augment_seed, pos))
                    for pos in range(len(idx))
                ]
            )
        return images, self.params[idx], self.snr[idx]

    def snr_values(self) -> np.ndarray:
        return self.snr.cpu().numpy().astype(float)

    def field_names(self) -> Tuple[str, ...]:
        return self.fields

    def field_indices(self, fname: str) -> np.ndarray:
        col = self.fields.index(fname)
        return self.params[:, col].cpu().numpy()

    def vocab_sizes(self) -> dict:
        # the injected noise column's level count comes from ModelConfig
        return {f: self.vocab.size(f) for f in self.fields if f != "noise"}
