from .catalog import FIELD_NAMES, ScanCatalog, ScanRecord, Vocab, load_catalog, save_catalog_json
from .images import DEFAULT_INPUT_SIZE, augment, decode_grayscale, preprocess
from .split import SplitSpec, sample_weights, stratified_split
from .synth import (
    AGENT_EFFECT,
    CURRENT_EFFECT,
    SynthConfig,
    VOLTAGE_EFFECT,
    oracle_label,
    synth_generate,
)
from .tensorset import TensorScanSet, derive_seed

__all__ = [
    "FIELD_NAMES",
    "ScanCatalog",
    "ScanRecord",
    "Vocab",
    "load_catalog",
    "save_catalog_json",
    "DEFAULT_INPUT_SIZE",
    "augment",
    "decode_grayscale",
    "preprocess",
    "SplitSpec",
    "sample_weights",
    "stratified_split",
    "AGENT_EFFECT",
    "CURRENT_EFFECT",
    "VOLTAGE_EFFECT",
    "SynthConfig",
    "oracle_label",
    "synth_generate",
    "TensorScanSet",
    "derive_seed",
]
