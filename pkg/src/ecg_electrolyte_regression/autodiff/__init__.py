"""Minimal reverse-mode autodiff over numpy, sized for 1-D residual networks."""

from ecg_electrolyte_regression.autodiff import functional
from ecg_electrolyte_regression.autodiff.gradcheck import gradcheck, numerical_gradient
from ecg_electrolyte_regression.autodiff.modules import (
    BatchNorm1d,
    Conv1d,
    Dropout,
    Linear,
    Module,
    Parameter,
)
from ecg_electrolyte_regression.autodiff.optim import Adam, ReduceLROnPlateau, adam_step
from ecg_electrolyte_regression.autodiff.tensor import Tensor, as_tensor, debug_mode, matmul, no_grad

__all__ = [
    "Adam",
    "BatchNorm1d",
    "Conv1d",
    "Dropout",
    "Linear",
    "Module",
    "Parameter",
    "ReduceLROnPlateau",
    "Tensor",
    "adam_step",
    "as_tensor",
    "debug_mode",
    "functional",
    "gradcheck",
    "matmul",
    "no_grad",
]
