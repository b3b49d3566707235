"""Catalog ingestion: metadata CSV plus referenced phantom images.

The normalized metadata format is one CSV with header
``filename,voltage,current,agent,snr``. Voltage and current are numeric
category levels, agent a free-form label, snr a finite real (negative
values occur). Vocabularies are built deterministically from the sorted
unique raw values so the same data always encodes the same way.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from ..errors import EmptyCatalog, MalformedRow, MissingImage

FIELD_NAMES = ("voltage", "current", "agent")


@dataclass(frozen=True)
class ScanRecord:
    """One phantom image with its acquisition metadata and SNR label."""

    image_path: Path
    voltage_kvp: int
    current_mas: int
    agent: str
    snr: float

    def raw_value(self, fname: str):
        if fname == "voltage":
            return self.voltage_kvp
        if fname == "current":
            return self.current_mas
        if fname == "agent":
            return self.agent
        raise KeyError(fname)


@dataclass(frozen=True)
class Vocab:
    """Per-field mapping from raw category value to dense index."""

    levels: Dict[str, Tuple]  # field -> ordered tuple of raw levels

    def index(self, fname: str, value) -> int:
        levels = self.levels[fname]
        try:
            return levels.index(value)
        except ValueError:
            raise KeyError(f"{fname} level {value!r} not in vocabulary") from None

    def value(self, fname: str, index: int):
        return self.levels[fname][index]

    def size(self, fname: str) -> int:
        return len(self.levels[fname])

    def sizes(self) -> Dict[str, int]:
        return {fname: len(levels) for fname, levels in self.levels.items()}

    def as_dict(self) -> Dict[str, list]:
        return {fname: list(levels) for fname, levels in self.levels.items()}

    @classmethod
    def from_records(cls, records: Sequence[ScanRecord]) -> "Vocab":
        return cls(
            levels={
                "voltage": tuple(sorted({r.voltage_kvp for r in records})),
                "current": tuple(sorted({r.current_mas for r in records})),
                "agent": tuple(sorted({r.agent for r in records})),
            }
        )

    @classmethod
    def from_dict(cls, data: Dict[str, list]) -> "Vocab":
        return cls(levels={fname: tuple(levels) for fname, levels in data.items()})


@dataclass
class ScanCatalog:
    records: List[ScanRecord]
    vocab: Vocab
    source: str
    content_hash: str

    def __len__(self) -> int:
        return len(self.records)

    def encode(self, record: ScanRecord) -> Tuple[int, int, int]:
        return (
            self.vocab.index("voltage", record.voltage_kvp),
            self.vocab.index("current", record.current_mas),
            self.vocab.index("agent", record.agent),
        )

    def snr_values(self) -> List[float]:
        return [r.snr for r in self.records]

    def find(self, voltage: int, current: int, agent: str) -> List[int]:
        """Indices of records matching the (v, t, a) triple exactly."""
        return [
            idx
            for idx, r in enumerate(self.records)
            if r.voltage_kvp == voltage and r.current_mas == current and r.agent == agent
        ]

    def summary(self) -> Dict:
        return {
            "n_records": len(self.records),
            "vocab": self.vocab.as_dict(),
            "source": self.source,
            "content_hash": self.content_hash,
        }


def _parse_int(raw: str, index: int, column: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise MalformedRow(index, f"non-numeric {column}: {raw!r}")
    if not value.is_integer():
        raise MalformedRow(index, f"non-integer {column}: {raw!r}")
    return int(value)


def load_catalog(root_path, metadata_file) -> ScanCatalog:
    """Load the metadata CSV and validate every referenced image exists.

    Rows with unparseable numerics raise MalformedRow with the offending
    row index (header = row 0); a missing image raises MissingImage; an
    empty table raises EmptyCatalog.
    """
    root = Path(root_path)
    metadata_path = Path(metadata_file)
    raw = metadata_path.read_bytes()
    content_hash = hashlib.sha256(raw).hexdigest()

    records: List[ScanRecord] = []
    reader = csv.DictReader(raw.decode("utf-8").splitlines())
    expected = {"filename", "voltage", "current", "agent", "snr"}
    if reader.fieldnames is None or not expected <= set(reader.fieldnames):
        raise EmptyCatalog(
            f"metadata file {metadata_path} lacks header columns {sorted(expected)}"
        )
    for index, row in enumerate(reader, start=1):
        filename = (row.get("filename") or "").strip()
        if not filename:
            raise MalformedRow(index, "empty filename")
        voltage = _parse_int((row.get("voltage") or "").strip(), index, "voltage")
        current = _parse_int((row.get("current") or "").strip(), index, "current")
        agent = (row.get("agent") or "").strip()
        if not agent:
            raise MalformedRow(index, "empty agent")
        try:
            snr = float((row.get("snr") or "").strip())
        except ValueError:
            raise MalformedRow(index, f"non-numeric snr: {row.get('snr')!r}")
        if not math.isfinite(snr):
            raise MalformedRow(index, f"non-finite snr: {snr!r}")
        image_path = root / filename
        if not image_path.exists():
            raise MissingImage(image_path)
        records.append(ScanRecord(image_path, voltage, current, agent, snr))

    if not records:
        raise EmptyCatalog(f"no records in {metadata_path}")

    vocab = Vocab.from_records(records)
    return ScanCatalog(
        records=records,
        vocab=vocab,
        source=str(metadata_path),
        content_hash=content_hash,
    )


def save_catalog_json(catalog: ScanCatalog, path) -> None:
    """Write the normalized catalog (records + vocab + provenance) as JSON."""
    payload = {
        "source": catalog.source,
        "content_hash": catalog.content_hash,
        "vocab": catalog.vocab.as_dict(),
        "records": [
            {
                "image_path": str(r.image_path),
                "voltage": r.voltage_kvp,
                "current": r.current_mas,
                "agent": r.agent,
                "snr": r.snr,
            }
            for r in catalog.records
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2))
