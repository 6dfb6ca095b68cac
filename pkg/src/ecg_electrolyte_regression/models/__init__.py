"""Residual backbone, output heads, training loop and the ridge baseline."""

from ecg_electrolyte_regression.models.backbone import ResidualBackbone, ResidualBlock
from ecg_electrolyte_regression.models.data import ArrayDataset, to_arrays
from ecg_electrolyte_regression.models.heads import (
    ClassificationHead,
    DirectHead,
    GaussianHead,
    Head,
    HeadKind,
    OrdinalHead,
    build_head,
    cross_entropy,
    gaussian_nll,
)
from ecg_electrolyte_regression.models.network import ElectrolyteNet, build_model
from ecg_electrolyte_regression.models.predictor import (
    Prediction,
    extract_features,
    predict,
    predict_from_features,
)
from ecg_electrolyte_regression.models.ridge import (
    RidgeModel,
    ridge_fit,
    ridge_predict,
    ridge_select,
)
from ecg_electrolyte_regression.models.training import EpochRecord, TrainingLog, train

__all__ = [
    "ArrayDataset",
    "ClassificationHead",
    "DirectHead",
    "ElectrolyteNet",
    "EpochRecord",
    "GaussianHead",
    "Head",
    "HeadKind",
    "OrdinalHead",
    "Prediction",
    "ResidualBackbone",
    "ResidualBlock",
    "RidgeModel",
    "TrainingLog",
    "build_head",
    "build_model",
    "cross_entropy",
    "extract_features",
    "gaussian_nll",
    "predict",
    "predict_from_features",
    "ridge_fit",
    "ridge_predict",
    "ridge_select",
    "to_arrays",
    "train",
]
