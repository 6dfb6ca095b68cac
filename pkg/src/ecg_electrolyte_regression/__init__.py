"""ECG electrolyte regression - predicting blood electrolyte levels from ECGs.

This package reproduces an ECG-to-electrolyte pipeline at desk scale on
synthetic data: zero-phase preprocessing, a small numpy autodiff engine, a
1-D residual network with direct, Gaussian, classification and ordinal heads,
ensemble and last-layer Laplace uncertainty, and the evaluation protocol.

Configuration:
- ExperimentConfig: generator, backbone, training and Laplace settings

Models:
- ResidualBackbone / ElectrolyteNet: the network and its heads
- RidgeModel: the PCA + ridge baseline

Persistence:
- ModelCheckpoint: versioned binary checkpoints
- CorpusStore: generated corpora with a manifest
"""

from ecg_electrolyte_regression.checkpoint import ModelCheckpoint
from ecg_electrolyte_regression.config import ExperimentConfig, load_config
from ecg_electrolyte_regression.errors import EcgElectrolyteError
from ecg_electrolyte_regression.models import ElectrolyteNet, ResidualBackbone, RidgeModel
from ecg_electrolyte_regression.store import CorpusStore
from ecg_electrolyte_regression.version import __version__

__all__ = [
    # Configuration
    "ExperimentConfig",
    "load_config",
    # Models
    "ElectrolyteNet",
    "ResidualBackbone",
    "RidgeModel",
    # Persistence
    "CorpusStore",
    "ModelCheckpoint",
    # Errors
    "EcgElectrolyteError",
    # Version
    "__version__",
]
