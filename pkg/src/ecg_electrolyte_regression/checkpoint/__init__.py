"""Versioned binary checkpoint containers.

- BaseCheckpointContainer: typed blob (de)serialisation and the file layout
- ModelCheckpoint: a trained network or ridge baseline with its codec and config
"""

from ecg_electrolyte_regression.checkpoint.base import (
    FORMAT_VERSION,
    MAGIC,
    BaseCheckpointContainer,
)
from ecg_electrolyte_regression.checkpoint.model import RIDGE_HEAD, ModelCheckpoint

__all__ = ["BaseCheckpointContainer", "FORMAT_VERSION", "MAGIC", "ModelCheckpoint", "RIDGE_HEAD"]
