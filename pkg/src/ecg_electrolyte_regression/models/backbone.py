"""Residual 1-D convolutional feature extractor."""

from __future__ import annotations

import numpy as np

from ecg_electrolyte_regression.autodiff import (
    BatchNorm1d,
    Conv1d,
    Dropout,
    Linear,
    Module,
    Tensor,
)
from ecg_electrolyte_regression.autodiff.functional import global_average_pool
from ecg_electrolyte_regression.config import BackboneConfig
from ecg_electrolyte_regression.errors import InvalidInputError


class ResidualBlock(Module):
    """conv -> bn -> relu -> dropout -> strided conv (+ skip) -> bn -> relu -> dropout.

    The skip path is the identity when shapes agree, else a strided 1x1 conv.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int,
        dropout: float,
        rng: np.random.Generator,
    ) -> None:
        self.conv1 = Conv1d(in_channels, out_channels, kernel_size, rng)
        self.bn1 = BatchNorm1d(out_channels)
        self.drop1 = Dropout(dropout, rng)
        self.conv2 = Conv1d(out_channels, out_channels, kernel_size, rng, stride=stride)
        self.bn2 = BatchNorm1d(out_channels)
        self.drop2 = Dropout(dropout, rng)
        self.skip = (
            Conv1d(in_channels, out_channels, 1, rng, stride=stride)
            if in_channels != out_channels or stride != 1
            else None
        )

    def forward(self, x: Tensor) -> Tensor:
        h = self.drop1(self.bn1(self.conv1(x)).relu())
        h = self.conv2(h)
        h = h + (self.skip(x) if self.skip is not None else x)
        return self.drop2(self.bn2(h).relu())


class ResidualBackbone(Module):
    """Maps (N, leads, samples) records to (N, output_dim) feature vectors."""

    def __init__(self, cfg: BackboneConfig, rng: np.random.Generator) -> None:
        self.cfg = cfg
        self.stem = Conv1d(cfg.in_leads, cfg.channels[0], cfg.kernel_size, rng)
        self.stem_bn = BatchNorm1d(cfg.channels[0])
        self.blocks: list[ResidualBlock] = []
        in_channels = cfg.channels[0]
        for out_channels, factor in zip(cfg.channels, cfg.downsample, strict=True):
            self.blocks.append(
                ResidualBlock(in_channels, out_channels, cfg.kernel_size, factor, cfg.dropout, rng)
            )
            in_channels = out_channels
        self.projection = (
            Linear(cfg.channels[-1], cfg.feature_dim, rng) if cfg.feature_dim is not None else None
        )

    @property
    def output_dim(self) -> int:
        return self.cfg.output_dim

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 3 or x.shape[1] != self.cfg.in_leads:
            raise InvalidInputError(
                f"Expected input of shape (N, {self.cfg.in_leads}, L), got {x.shape}"
            )
        h = self.stem_bn(self.stem(x)).relu()
        for block in self.blocks:
            h = block(h)
        h = global_average_pool(h)
        if self.projection is not None:
            h = self.projection(h).relu()
        return h


__all__ = ["ResidualBackbone", "ResidualBlock"]
