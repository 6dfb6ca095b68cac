"""Record file formats.

Text format (``.ecg.txt``)::

    # ecg-record text v1
    # leads = 8
    # fs = 500.0
    # n_samples = 5000
    # meta.patient_id = P000001
    # meta.age = 61.3
    # meta.sex = F
    # meta.timestamp = 2013-05-02T08:14:00
    0.0123 -0.0451 ...        (one row per sample, one column per lead)

Binary format (``.ecg``), all integers little-endian::

    bytes 0..7    magic b"ECGRAW\\x00\\x00"
    bytes 8..9    uint16 format version
    bytes 10..11  uint16 lead count
    bytes 12..15  uint32 reserved (zero)
    float64 fs, uint64 n_samples, uint32 metadata length
    UTF-8 JSON metadata
    float64 samples, lead-major (leads x n_samples)
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.signal.records import N_LEADS, EcgMetadata, RawEcg

TEXT_BANNER = "# ecg-record text v1"
BINARY_MAGIC = b"ECGRAW\x00\x00"
BINARY_VERSION = 1
_HEADER = struct.Struct("<8sHHI")
_BODY_HEADER = struct.Struct("<dQI")


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write ``payload`` to a temp file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def dumps_text(ecg: RawEcg) -> str:
    lines = [
        TEXT_BANNER,
        f"# leads = {ecg.leads.shape[0]}",
        f"# fs = {ecg.fs!r}",
        f"# n_samples = {ecg.n_samples}",
    ]
    for key, value in ecg.meta.to_dict().items():
        if value is not None:
            lines.append(f"# meta.{key} = {value}")
    buf = io.StringIO()
    np.savetxt(buf, ecg.leads.T, fmt="%.17g")
    return "\n".join(lines) + "\n" + buf.getvalue()


def loads_text(text: str) -> RawEcg:
    header: dict[str, str] = {}
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)

    try:
        n_leads = int(header["leads"])
        fs = float(header["fs"])
        n_samples = int(header["n_samples"])
    except KeyError as e:
        raise InvalidInputError(f"Record header is missing {e.args[0]!r}") from e

    samples = np.loadtxt(body, ndmin=2) if body else np.empty((0, n_leads))
    if samples.shape != (n_samples, n_leads):
        raise InvalidInputError(
            f"Record body has shape {samples.shape}, header declares ({n_samples}, {n_leads})"
        )
    meta = EcgMetadata.from_dict(
        {k.removeprefix("meta."): v for k, v in header.items() if k.startswith("meta.")}
    )
    return RawEcg(leads=samples.T.copy(), fs=fs, meta=meta)


def dumps_binary(ecg: RawEcg) -> bytes:
    meta = json.dumps(ecg.meta.to_dict(), separators=(",", ":")).encode("utf-8")
    return b"".join(
        [
            _HEADER.pack(BINARY_MAGIC, BINARY_VERSION, ecg.leads.shape[0], 0),
            _BODY_HEADER.pack(ecg.fs, ecg.n_samples, len(meta)),
            meta,
            np.ascontiguousarray(ecg.leads, dtype="<f8").tobytes(),
        ]
    )


def loads_binary(payload: bytes) -> RawEcg:
    if len(payload) < _HEADER.size + _BODY_HEADER.size:
        raise InvalidInputError("Binary record is truncated")
    magic, version, n_leads, _ = _HEADER.unpack_from(payload, 0)
    if magic != BINARY_MAGIC:
        raise InvalidInputError(f"Not a binary ECG record (magic {magic!r})")
    if version != BINARY_VERSION:
        raise InvalidInputError(f"Unsupported binary record version {version}")
    fs, n_samples, meta_len = _BODY_HEADER.unpack_from(payload, _HEADER.size)
    offset = _HEADER.size + _BODY_HEADER.size
    meta = EcgMetadata.from_dict(json.loads(payload[offset : offset + meta_len]))
    offset += meta_len
    expected = n_leads * n_samples * 8
    if len(payload) - offset != expected:
        raise InvalidInputError(
            f"Binary record body holds {len(payload) - offset} bytes, expected {expected}"
        )
    leads = np.frombuffer(payload, dtype="<f8", offset=offset).reshape(n_leads, n_samples)
    return RawEcg(leads=leads.astype(np.float64), fs=fs, meta=meta)


def write_record(ecg: RawEcg, path: str | Path) -> Path:
    """Write a record; ``.txt`` suffix selects the text format, anything else binary."""
    path = Path(path)
    if path.suffix == ".txt":
        atomic_write_bytes(path, dumps_text(ecg).encode("utf-8"))
    else:
        atomic_write_bytes(path, dumps_binary(ecg))
    return path


def read_record(path: str | Path) -> RawEcg:
    """Read a record written by `write_record`."""
    path = Path(path)
    if path.suffix == ".txt":
        return loads_text(path.read_text(encoding="utf-8"))
    return loads_binary(path.read_bytes())


__all__ = [
    "BINARY_MAGIC",
    "N_LEADS",
    "atomic_write_bytes",
    "dumps_binary",
    "dumps_text",
    "loads_binary",
    "loads_text",
    "read_record",
    "write_record",
]
