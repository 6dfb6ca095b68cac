"""Base checkpoint container with typed blob serialisation.

Layout of a container file (integers little-endian)::

    bytes 0..7     magic b"ECGCKPT1"
    bytes 8..11    uint32 format version
    bytes 12..19   uint64 header length H
    bytes 20..     UTF-8 JSON header (H bytes)
    ...            blobs, back to back, at the offsets listed in header["blobs"]

Each blob index entry is ``{"name", "type", "offset", "length"}`` with offsets
relative to the first byte after the header. Types are ``"json"`` (UTF-8 JSON),
``"numpy"`` (``.npy`` bytes, no pickles) and ``"empty"`` (no payload, loads as
None).
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from ecg_electrolyte_regression.errors import CheckpointError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.io import atomic_write_bytes

MAGIC = b"ECGCKPT1"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")


class BaseCheckpointContainer:
    """Shared (de)serialisation for checkpoint files.

    Subclasses decide what goes into the header and which named values are
    stored as blobs.
    """

    @staticmethod
    def _dumps_typed(value: Any) -> tuple[str, bytes]:
        if value is None:
            return "empty", b""
        if isinstance(value, np.ndarray):
            buf = io.BytesIO()
            np.save(buf, value, allow_pickle=False)
            return "numpy", buf.getvalue()
        return "json", json.dumps(value, sort_keys=True).encode("utf-8")

    @staticmethod
    def _loads_typed(type_: str, blob: bytes) -> Any:
        if type_ == "empty":
            return None
        if type_ == "numpy":
            return np.load(io.BytesIO(blob), allow_pickle=False)
        if type_ == "json":
            return json.loads(blob.decode("utf-8"))
        raise CheckpointError(f"Unknown blob type {type_!r}")

    def _dump_blobs(self, values: dict[str, Any]) -> list[tuple[str, str, bytes]]:
        """Serialise named values.

        Args:
            values: Blob name to value.

        Returns:
            List of (name, type, payload) tuples in name order.
        """
        return [(name, *self._dumps_typed(values[name])) for name in sorted(values)]

    def _load_blobs(self, blob_values: list[tuple[str, str, bytes]] | None) -> dict[str, Any]:
        """Inverse of `_dump_blobs`; empty blobs are omitted."""
        if not blob_values:
            return {}
        return {
            name: self._loads_typed(type_, blob)
            for name, type_, blob in blob_values
            if type_ != "empty"
        }

    def _pack(self, header: dict[str, Any], values: dict[str, Any]) -> bytes:
        blobs = self._dump_blobs(values)
        index, offset = [], 0
        for name, type_, blob in blobs:
            index.append({"name": name, "type": type_, "offset": offset, "length": len(blob)})
            offset += len(blob)
        header_bytes = json.dumps({**header, "blobs": index}, sort_keys=True).encode("utf-8")
        return b"".join(
            [
                _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)),
                header_bytes,
                *(blob for _, _, blob in blobs),
            ]
        )

    def _unpack(self, payload: bytes) -> tuple[dict[str, Any], dict[str, Any]]:
        if len(payload) < _PREAMBLE.size:
            raise CheckpointError("File is too short to be a checkpoint")
        magic, version, header_len = _PREAMBLE.unpack_from(payload)
        if magic != MAGIC:
            raise CheckpointError(f"Not a checkpoint file (magic {magic!r})")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"Unsupported checkpoint format version {version}")
        start = _PREAMBLE.size
        try:
            header = json.loads(payload[start : start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"Corrupt checkpoint header: {e}") from e
        body = start + header_len
        rows = []
        for entry in header.pop("blobs"):
            lo = body + entry["offset"]
            hi = lo + entry["length"]
            if hi > len(payload):
                raise CheckpointError(f"Blob {entry['name']} runs past the end of the file")
            rows.append((entry["name"], entry["type"], payload[lo:hi]))
        return header, self._load_blobs(rows)

    def _write(self, path: str | Path, header: dict[str, Any], values: dict[str, Any]) -> Path:
        path = Path(path)
        try:
            atomic_write_bytes(path, self._pack(header, values))
        except Exception as e:
            logger.error(f"Failed to write checkpoint {path}: {e}")
            raise
        return path

    def _read(self, path: str | Path) -> tuple[dict[str, Any], dict[str, Any]]:
        path = Path(path)
        try:
            payload = path.read_bytes()
        except FileNotFoundError as e:
            raise CheckpointError(f"Checkpoint not found: {path}") from e
        return self._unpack(payload)


__all__ = ["BaseCheckpointContainer", "FORMAT_VERSION", "MAGIC"]
