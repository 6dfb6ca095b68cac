"""Trained-model checkpoints: networks (any head) and the ridge baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ecg_electrolyte_regression.checkpoint.base import BaseCheckpointContainer
from ecg_electrolyte_regression.config import ExperimentConfig, config_hash
from ecg_electrolyte_regression.errors import CheckpointError
from ecg_electrolyte_regression.features import PcaModel
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.models.network import ElectrolyteNet, build_model
from ecg_electrolyte_regression.models.ridge import RidgeModel
from ecg_electrolyte_regression.models.training import TrainingLog
from ecg_electrolyte_regression.targets import BinaryTask, TargetCodec
from ecg_electrolyte_regression.uncertainty.ensemble import EnsembleMember
from ecg_electrolyte_regression.uncertainty.laplace import LaplacePosterior
from ecg_electrolyte_regression.version import __version__

RIDGE_HEAD = "ridge"


@dataclass
class ModelCheckpoint(BaseCheckpointContainer):
    """Everything needed to rebuild and evaluate one trained model.

    Attributes:
        head: Head kind value, or ``"ridge"`` for the linear baseline.
        seed: Training seed.
        config: Experiment configuration the model was trained under.
        codec: Target codec fitted on the training labels.
        k: Class count of discretised heads.
        state: Network parameters and buffers by dotted name.
        training_log: Per-epoch losses.
        laplace: Last-layer posterior of a Gaussian head.
        pca: PCA model feeding the ridge baseline.
        ridge: Ridge weights.
    """

    head: str
    seed: int
    config: ExperimentConfig
    codec: TargetCodec
    k: int | None = None
    state: dict[str, np.ndarray] = field(default_factory=dict)
    training_log: TrainingLog | None = None
    laplace: LaplacePosterior | None = None
    pca: PcaModel | None = None
    ridge: RidgeModel | None = None
    package_version: str = __version__

    @property
    def task(self) -> BinaryTask | None:
        return self.codec.task

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def family(self) -> tuple[str, int | None]:
        return self.head, self.k

    @classmethod
    def from_network(
        cls,
        model: ElectrolyteNet,
        codec: TargetCodec,
        config: ExperimentConfig,
        seed: int,
        training_log: TrainingLog | None = None,
        laplace: LaplacePosterior | None = None,
    ) -> ModelCheckpoint:
        return cls(
            head=model.kind.value,
            seed=seed,
            config=config,
            codec=codec,
            k=model.k,
            state=model.state_dict(),
            training_log=training_log,
            laplace=laplace,
        )

    def build_network(self) -> ElectrolyteNet:
        """Recreate the network and load the stored parameters."""
        if self.head == RIDGE_HEAD:
            raise CheckpointError("A ridge checkpoint holds no network")
        model = build_model(self.config.backbone, self.head, seed=self.seed, k=self.k)
        model.load_state_dict(self.state)
        return model.eval()

    def to_member(self) -> EnsembleMember:
        return EnsembleMember(
            model=self.build_network(), codec=self.codec, seed=self.seed, laplace=self.laplace
        )

    def save(self, path: str | Path) -> Path:
        """Atomically write the checkpoint container."""
        header: dict[str, Any] = {
            "head": self.head,
            "seed": self.seed,
            "k": self.k,
            "config": self.config.model_dump(mode="json"),
            "config_hash": self.config_hash,
            "package_version": self.package_version,
            "codec": self.codec.to_dict(),
            "training_log": self.training_log.to_dict() if self.training_log else None,
            "state_keys": sorted(self.state),
            "laplace_prior_precision": self.laplace.prior_precision if self.laplace else None,
            "laplace_log_evidence": self.laplace.log_evidence if self.laplace else None,
            "pca_total_variance": self.pca.total_variance if self.pca else None,
            "ridge": {"intercept": self.ridge.intercept, "lam": self.ridge.lam} if self.ridge else None,
        }
        values: dict[str, Any] = {f"state/{k}": v for k, v in self.state.items()}
        if self.laplace is not None:
            values["laplace/theta_map"] = self.laplace.theta_map
            values["laplace/covariance"] = self.laplace.covariance
        if self.pca is not None:
            values["pca/mean"] = self.pca.mean
            values["pca/components"] = self.pca.components
            values["pca/eigenvalues"] = self.pca.eigenvalues
        if self.ridge is not None:
            values["ridge/weights"] = self.ridge.weights
        path = self._write(path, header, values)
        logger.info(f"Wrote {self.head} checkpoint (seed {self.seed}) to {path}")
        return path

    @classmethod
    def load(cls, path: str | Path) -> ModelCheckpoint:
        """Read a checkpoint written by `save`.

        Raises:
            CheckpointError: On a missing file, wrong magic, unsupported
                version or missing blobs.
        """
        header, values = BaseCheckpointContainer()._read(path)
        try:
            state = {k: values[f"state/{k}"] for k in header["state_keys"]}
            laplace = None
            if header["laplace_prior_precision"] is not None:
                laplace = LaplacePosterior(
                    theta_map=values["laplace/theta_map"],
                    covariance=values["laplace/covariance"],
                    prior_precision=header["laplace_prior_precision"],
                    log_evidence=header["laplace_log_evidence"],
                )
            pca = None
            if header["pca_total_variance"] is not None:
                pca = PcaModel(
                    mean=values["pca/mean"],
                    components=values["pca/components"],
                    eigenvalues=values["pca/eigenvalues"],
                    total_variance=header["pca_total_variance"],
                )
            ridge = None
            if header["ridge"] is not None:
                ridge = RidgeModel(weights=values["ridge/weights"], **header["ridge"])
            log = header["training_log"]
            return cls(
                head=header["head"],
                seed=int(header["seed"]),
                config=ExperimentConfig.model_validate(header["config"]),
                codec=TargetCodec.from_dict(header["codec"]),
                k=header["k"],
                state=state,
                training_log=TrainingLog.from_dict(log) if log else None,
                laplace=laplace,
                pca=pca,
                ridge=ridge,
                package_version=header["package_version"],
            )
        except KeyError as e:
            raise CheckpointError(f"Checkpoint {path} is missing {e}") from e


__all__ = ["ModelCheckpoint", "RIDGE_HEAD"]
