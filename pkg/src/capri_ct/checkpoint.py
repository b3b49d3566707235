"""Self-describing checkpoint container.

Single-model layout:

    magic "CAPRIKPT" | uint32 format version | uint64 manifest length |
    manifest JSON (utf-8) | tensor blob

The manifest records the model/train configuration, vocabulary, tensor
index (name, shape, dtype, byte offset/length into the blob) and the
blob's sha256; loading verifies the hash and the format version. Tensors
are little-endian raw bytes, float32 except the int64 batch-norm step
counters. An ensemble is a directory of member files plus ensemble.json.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Tuple

import numpy as np
import torch

from .data.catalog import Vocab
from .data.split import SplitSpec
from .errors import CorruptCheckpoint, FormatVersionMismatch
from .model import ModelConfig, SnrVae
from .training import Ensemble, Metrics, TrainConfig, TrainedModel

MAGIC = b"CAPRIKPT"
FORMAT_VERSION = 1

_DTYPES = {"<f4": np.float32, "<i8": np.int64}
_TORCH_TO_TAG = {torch.float32: "<f4", torch.int64: "<i8"}


def _manifest_for(model: TrainedModel) -> Tuple[dict, bytes]:
    tensors = []
    blob = bytearray()
    for name, tensor in model.net.state_dict().items():
        tag = _TORCH_TO_TAG.get(tensor.dtype)
        if tag is None:
            raise CorruptCheckpoint(f"unsupported tensor dtype {tensor.dtype} for {name}")
        data = tensor.detach().cpu().numpy().astype(_DTYPES[tag], copy=False)
        raw = data.astype(data.dtype.newbyteorder("<"), copy=False).tobytes()
        tensors.append(
            {
                "name": name,
                "shape": list(tensor.shape),
                "dtype": tag,
                "offset": len(blob),
                "nbytes": len(raw),
            }
        )
        blob.extend(raw)
    blob = bytes(blob)
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": {
            **asdict(model.model_config),
            "conv_channels": list(model.model_config.conv_channels),
            "fields": list(model.model_config.fields),
            "decoder_hidden": list(model.model_config.decoder_hidden),
        },
        "train_config": {
            **asdict(model.train_config),
            "split": asdict(model.train_config.split),
        },
        "vocab": model.vocab.as_dict(),
        "vocab_sizes": model.vocab_sizes,
        "training_seed": model.train_config.seed,
        "metrics": model.metrics.as_dict(),
        "tensors": tensors,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    return manifest, blob


def save_model(model: TrainedModel, path) -> None:
    manifest, blob = _manifest_for(model)
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(manifest_bytes)))
        fh.write(manifest_bytes)
        fh.write(blob)


def _config_from_manifest(manifest: dict) -> ModelConfig:
    raw = dict(manifest["model_config"])
    raw["conv_channels"] = tuple(raw["conv_channels"])
    raw["fields"] = tuple(raw["fields"])
    raw["decoder_hidden"] = tuple(raw["decoder_hidden"])
    return ModelConfig(**raw)


def _train_config_from_manifest(manifest: dict) -> TrainConfig:
    raw = dict(manifest["train_config"])
    raw["split"] = SplitSpec(**raw["split"])
    return TrainConfig(**raw)


def load_model(path) -> TrainedModel:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 12 or raw[: len(MAGIC)] != MAGIC:
        raise CorruptCheckpoint(f"{path} is not a model checkpoint")
    version = struct.unpack_from("<I", raw, len(MAGIC))[0]
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"checkpoint format {version} unsupported (expected {FORMAT_VERSION})"
        )
    manifest_len = struct.unpack_from("<Q", raw, len(MAGIC) + 4)[0]
    header_end = len(MAGIC) + 12
    if len(raw) < header_end + manifest_len:
        raise CorruptCheckpoint(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[header_end : header_end + manifest_len])
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"{path}: manifest is not valid JSON: {exc}")
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"manifest format {manifest.get('format_version')} unsupported"
        )
    blob = raw[header_end + manifest_len :]
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise CorruptCheckpoint(f"{path}: tensor blob hash mismatch")

    config = _config_from_manifest(manifest)
    vocab = Vocab.from_dict(manifest["vocab"])
    net = SnrVae(config, manifest["vocab_sizes"])
    state = {}
    for entry in manifest["tensors"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(blob):
            raise CorruptCheckpoint(f"{path}: tensor {entry['name']} out of bounds")
        array = np.frombuffer(
            blob, dtype=np.dtype(entry["dtype"]), count=nbytes // np.dtype(entry["dtype"]).itemsize,
            offset=start,
        ).reshape(entry["shape"])
        state[entry["name"]] = torch.from_numpy(array.copy())
    net.load_state_dict(state)
    net.eval()
    metrics = Metrics(**manifest["metrics"])
    return TrainedModel(
        net=net,
        model_config=config,
        train_config=_train_config_from_manifest(manifest),
        metrics=metrics,
        history=[],
        vocab=vocab,
        vocab_sizes=manifest["vocab_sizes"],
    )


def save_ensemble(ensemble: Ensemble, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    filenames = []
    for i, member in enumerate(ensemble.members):
        filename = f"member_{i:02d}.ckpt"
        save_model(member, directory / filename)
        filenames.append(filename)
    meta = {
        "format_version": FORMAT_VERSION,
        "best_index": ensemble.best_index,
        "members": filenames,
        "metrics": [m.metrics.as_dict() for m in ensemble.members],
    }
    (directory / "ensemble.json").write_text(json.dumps(meta, indent=2))


def load_ensemble(directory) -> Ensemble:
    directory = Path(directory)
    meta_path = directory / "ensemble.json"
    if not meta_path.exists():
        raise CorruptCheckpoint(f"{directory} has no ensemble.json")
    meta = json.loads(meta_path.read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"ensemble format {meta.get('format_version')} unsupported"
        )
    members = [load_model(directory / name) for name in meta["members"]]
    return Ensemble(members=members, best_index=meta["best_index"])


def save_checkpoint(obj, path) -> None:
    """Save a TrainedModel to a file or an Ensemble to a directory."""
    if isinstance(obj, Ensemble):
        save_ensemble(obj, path)
    elif isinstance(obj, TrainedModel):
        save_model(obj, path)
    else:
        raise TypeError(f"cannot checkpoint {type(obj).__name__}")


def load_checkpoint(path):
    path = Path(path)
    if path.is_dir():
        return load_ensemble(path)
    return load_model(path)


def checkpoint_hash(path) -> str:
    """Content hash identifying a checkpoint (file or ensemble directory)."""
    path = Path(path)
    digest = hashlib.sha256()
    if path.is_dir():
        for item in sorted(path.rglob("*")):
            if item.is_file():
                digest.update(item.name.encode())
                digest.update(item.read_bytes())
    else:
        digest.update(path.read_bytes())
    return digest.hexdigest()
