"""Mini-batch training with Adam, a plateau schedule and best-validation selection."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from ecg_electrolyte_regression.autodiff import Adam, ReduceLROnPlateau, Tensor, no_grad
from ecg_electrolyte_regression.config import TrainConfig
from ecg_electrolyte_regression.errors import InvalidInputError, NonFiniteError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.models.data import ArrayDataset
from ecg_electrolyte_regression.models.network import ElectrolyteNet
from ecg_electrolyte_regression.targets import TargetCodec


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    lr_reduced: bool


@dataclass
class TrainingLog:
    """Per-epoch losses and the selected epoch."""

    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")

    def to_dict(self) -> dict[str, Any]:
        return {
            "epochs": [asdict(e) for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrainingLog:
        return cls(
            epochs=[EpochRecord(**e) for e in data["epochs"]],
            best_epoch=int(data["best_epoch"]),
            best_val_loss=float(data["best_val_loss"]),
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(e) for e in self.epochs])


def _batches(n: int, batch_size: int, order: np.ndarray | None = None) -> list[np.ndarray]:
    index = np.arange(n) if order is None else order
    return [index[i : i + batch_size] for i in range(0, n, batch_size)]


def evaluate_loss(
    model: ElectrolyteNet, data: ArrayDataset, targets: np.ndarray, batch_size: int = 64
) -> float:
    """Size-weighted mean loss in evaluation mode."""
    model.eval()
    total = 0.0
    with no_grad():
        for idx in _batches(len(data), batch_size):
            out = model(Tensor(data.x[idx]))
            total += model.head.loss(out, targets[idx]).item() * len(idx)
    return total / len(data)


def train(
    model: ElectrolyteNet,
    train_data: ArrayDataset,
    val_data: ArrayDataset,
    codec: TargetCodec,
    cfg: TrainConfig,
) -> TrainingLog:
    """Fit ``model`` in place and return its training log.

    Targets are produced by the head from ``codec`` (z-scores, class indices or
    rank targets). After the last epoch the parameters of the epoch with the
    lowest validation loss are restored when ``cfg.select_best_validation``.

    Args:
        model: Network to train.
        train_data: Training records and raw labels.
        val_data: Validation records and raw labels.
        codec: Target codec fitted on the training labels.
        cfg: Optimisation schedule.

    Returns:
        Per-epoch train/validation losses, learning rates and the selected epoch.

    Raises:
        NonFiniteError: If a loss becomes NaN or infinite.
    """
    if len(train_data) == 0 or len(val_data) == 0:
        raise InvalidInputError("Training and validation sets must be non-empty")
    y_train = model.head.targets(train_data.y, codec)
    y_val = model.head.targets(val_data.y, codec)

    optimizer = Adam(model.parameters(), lr=cfg.lr)
    scheduler = ReduceLROnPlateau(
        optimizer, factor=cfg.lr_factor, patience=cfg.lr_patience, min_lr=cfg.min_lr
    )
    rng = np.random.default_rng(cfg.seed)
    log = TrainingLog()
    best_state = model.state_dict()

    logger.info(
        f"Training {model.kind.value} head on {len(train_data)} records "
        f"({len(val_data)} validation) for {cfg.epochs} epochs"
    )
    for epoch in range(cfg.epochs):
        model.train()
        running = 0.0
        for idx in _batches(len(train_data), cfg.batch_size, rng.permutation(len(train_data))):
            optimizer.zero_grad()
            loss = model.head.loss(model(Tensor(train_data.x[idx])), y_train[idx])
            if not np.isfinite(loss.item()):
                logger.error(f"Training loss diverged at epoch {epoch}")
                raise NonFiniteError(f"Training loss is {loss.item()} at epoch {epoch}")
            loss.backward()
            optimizer.step()
            running += loss.item() * len(idx)
            logger.debug(f"epoch {epoch} batch loss {loss.item():.5f}")
        train_loss = running / len(train_data)

        val_loss = evaluate_loss(model, val_data, y_val, batch_size=cfg.batch_size)
        if not np.isfinite(val_loss):
            logger.error(f"Validation loss diverged at epoch {epoch} (train loss {train_loss:.5f})")
            raise NonFiniteError(f"Validation loss is {val_loss} at epoch {epoch}")

        lr = optimizer.lr
        reduced = scheduler.step(val_loss)
        log.epochs.append(EpochRecord(epoch, train_loss, val_loss, lr, reduced))
        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best_state = model.state_dict()
        logger.info(
            f"epoch {epoch + 1}/{cfg.epochs} train {train_loss:.4f} val {val_loss:.4f} lr {lr:.1e}"
        )

    if cfg.select_best_validation:
        model.load_state_dict(best_state)
    else:
        log.best_epoch = cfg.epochs - 1
        log.best_val_loss = log.epochs[-1].val_loss
    model.eval()
    logger.info(f"Selected epoch {log.best_epoch + 1} with validation loss {log.best_val_loss:.4f}")
    return log


__all__ = ["EpochRecord", "TrainingLog", "evaluate_loss", "train"]
