"""File-backed stores.

- BaseFileStore: (namespace, key) addressing under a root directory
- CorpusStore: generated corpora with a JSON manifest
"""

from ecg_electrolyte_regression.store.base import BaseFileStore
from ecg_electrolyte_regression.store.corpus import MANIFEST_FILE, CorpusStore, StoredRecord

__all__ = ["BaseFileStore", "CorpusStore", "MANIFEST_FILE", "StoredRecord"]
