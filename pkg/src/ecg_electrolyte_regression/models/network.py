"""Backbone plus head."""

from __future__ import annotations

import numpy as np

from ecg_electrolyte_regression.autodiff import Module, Tensor
from ecg_electrolyte_regression.config import BackboneConfig
from ecg_electrolyte_regression.models.backbone import ResidualBackbone
from ecg_electrolyte_regression.models.heads import Head, HeadKind, build_head


class ElectrolyteNet(Module):
    """A residual backbone feeding one output head."""

    def __init__(self, backbone: ResidualBackbone, head: Head) -> None:
        self.backbone = backbone
        self.head = head

    @property
    def kind(self) -> HeadKind:
        return self.head.kind

    @property
    def k(self) -> int | None:
        return getattr(self.head, "k", None)

    def features(self, x: Tensor) -> Tensor:
        return self.backbone(x)

    def forward(self, x: Tensor) -> Tensor:
        return self.head(self.backbone(x))


def build_model(
    cfg: BackboneConfig, kind: HeadKind | str, seed: int, k: int | None = None
) -> ElectrolyteNet:
    """Build a freshly initialised network; ``seed`` fixes weights and dropout masks."""
    rng = np.random.default_rng(seed)
    backbone = ResidualBackbone(cfg, rng)
    head = build_head(kind, backbone.output_dim, rng, k=k)
    return ElectrolyteNet(backbone, head)


__all__ = ["ElectrolyteNet", "build_model"]
