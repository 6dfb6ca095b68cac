"""On-disk corpus: one binary record file per ECG plus a JSON manifest.

Layout::

    <root>/manifest.json
    <root>/<split>/<patient_id>/<n>.ecg

The manifest holds the generator config and its hash, the Bayes-optimal MAE,
per-split patient counts and one entry per example (file, label, timestamps,
demographics, lab draws).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any

from ecg_electrolyte_regression.config import ElectrolyteKind, GeneratorConfig, config_hash
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.io import atomic_write_bytes, read_record, write_record
from ecg_electrolyte_regression.signal.records import RawEcg
from ecg_electrolyte_regression.store.base import BaseFileStore
from ecg_electrolyte_regression.synthdata.dataset import SPLIT_NAMES, DatasetSplits, LabeledExample
from ecg_electrolyte_regression.version import __version__

MANIFEST_FILE = "manifest.json"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class StoredRecord:
    """A record file read on demand."""

    path: Path

    def load(self) -> RawEcg:
        return read_record(self.path)


def _example_entry(ex: LabeledExample, file: str) -> dict[str, Any]:
    return {
        "file": file,
        "patient_id": ex.patient_id,
        "y": ex.y,
        "timestamp": ex.timestamp.isoformat(),
        "lab_draw_timestamp": ex.lab_draw_timestamp.isoformat(),
        "age": ex.age,
        "sex": ex.sex,
        "lab_values": list(ex.lab_values),
    }


class CorpusStore(BaseFileStore):
    """Writes and reads generated corpora."""

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def write(self, splits: DatasetSplits, cfg: GeneratorConfig) -> Path:
        """Synthesise and write every record, then the manifest.

        Returns:
            Path of the manifest.
        """
        entries: dict[str, list[dict[str, Any]]] = {}
        try:
            for name in SPLIT_NAMES:
                entries[name] = []
                counters: dict[str, int] = {}
                for ex in splits.split(name):
                    n = counters.get(ex.patient_id, 0)
                    counters[ex.patient_id] = n + 1
                    path = self._path((name, ex.patient_id), f"{n}.ecg")
                    write_record(ex.ecg, path)
                    entries[name].append(_example_entry(ex, path.relative_to(self.root).as_posix()))
                logger.debug(f"Wrote {len(entries[name])} {name} records")
            manifest = {
                "manifest_version": MANIFEST_VERSION,
                "package_version": __version__,
                "electrolyte": splits.electrolyte.value,
                "generator": cfg.model_dump(mode="json"),
                "config_hash": config_hash(cfg),
                "bayes_optimal_mae": splits.bayes_optimal_mae,
                "patients": {name: len(splits.patient_ids(name)) for name in SPLIT_NAMES},
                "splits": entries,
            }
            atomic_write_bytes(
                self.manifest_path, json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")
            )
        except Exception as e:
            logger.error(f"Failed to write corpus to {self.root}: {e}")
            raise
        logger.info(f"Wrote corpus manifest {self.manifest_path}")
        return self.manifest_path

    def manifest(self) -> dict[str, Any]:
        try:
            return json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise InvalidInputError(f"No corpus manifest at {self.manifest_path}") from e

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig.model_validate(self.manifest()["generator"])

    def check_records(self, manifest: dict[str, Any]) -> None:
        """Check that every patient the manifest lists has a record directory.

        Raises:
            InvalidInputError: If any patient directory is missing.
        """
        on_disk = set(self.list_namespaces())
        missing = sorted(
            {(name, e["patient_id"]) for name in SPLIT_NAMES for e in manifest["splits"].get(name, [])}
            - on_disk
        )
        if missing:
            shown = ", ".join("/".join(ns) for ns in missing[:5])
            raise InvalidInputError(
                f"Corpus at {self.root} is missing records for {len(missing)} patients: {shown}"
            )

    def read(self) -> DatasetSplits:
        """Load the splits; record files are read lazily.

        Raises:
            InvalidInputError: Without a manifest or with patient records missing.
        """
        manifest = self.manifest()
        self.check_records(manifest)
        electrolyte = ElectrolyteKind(manifest["electrolyte"])
        buckets: dict[str, list[LabeledExample]] = {}
        for name in SPLIT_NAMES:
            buckets[name] = [
                LabeledExample(
                    source=StoredRecord(self.root / e["file"]),
                    y=float(e["y"]),
                    electrolyte=electrolyte,
                    patient_id=e["patient_id"],
                    timestamp=datetime.fromisoformat(e["timestamp"]),
                    lab_draw_timestamp=datetime.fromisoformat(e["lab_draw_timestamp"]),
                    age=e["age"],
                    sex=e["sex"],
                    lab_values=tuple(e["lab_values"]),
                )
                for e in manifest["splits"].get(name, [])
            ]
        return DatasetSplits(
            train=buckets["train"],
            validation=buckets["validation"],
            random_test=buckets["random-test"],
            temporal_test=buckets["temporal-test"],
            electrolyte=electrolyte,
            bayes_optimal_mae=float(manifest["bayes_optimal_mae"]),
        )


__all__ = ["CorpusStore", "MANIFEST_FILE", "StoredRecord"]
