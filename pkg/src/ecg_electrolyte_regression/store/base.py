"""Namespace-to-path helpers shared by on-disk stores."""

from __future__ import annotations

import re
from pathlib import Path

from ecg_electrolyte_regression.errors import InvalidInputError

_SEGMENT = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class BaseFileStore:
    """A directory whose entries are addressed by (namespace, key).

    Namespaces are tuples of path-safe segments; ``("train", "P000001")`` with
    key ``"0.ecg"`` maps to ``<root>/train/P000001/0.ecg``.
    """

    root: Path

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    @staticmethod
    def _encode_namespace(namespace: tuple[str, ...]) -> str:
        """Encode a namespace tuple as a relative POSIX path.

        Raises:
            InvalidInputError: If a segment is empty or not path-safe.
        """
        for segment in namespace:
            if not _SEGMENT.match(segment) or segment in (".", ".."):
                raise InvalidInputError(f"Invalid namespace segment {segment!r}")
        return "/".join(namespace)

    @staticmethod
    def _decode_namespace(namespace_str: str) -> tuple[str, ...]:
        return tuple(part for part in namespace_str.split("/") if part)

    def _path(self, namespace: tuple[str, ...], key: str) -> Path:
        return self.root / self._encode_namespace(namespace) / self._encode_namespace((key,))

    def list_namespaces(self, prefix: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
        """Namespaces holding at least one entry, optionally under ``prefix``."""
        base = self.root / self._encode_namespace(prefix) if prefix else self.root
        if not base.exists():
            return []
        found = {
            self._decode_namespace(p.parent.relative_to(self.root).as_posix())
            for p in base.rglob("*")
            if p.is_file() and not p.name.startswith(".")
        }
        return sorted(ns for ns in found if ns)


__all__ = ["BaseFileStore"]
