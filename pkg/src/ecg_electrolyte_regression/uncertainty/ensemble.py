"""Deep ensembles and the three per-prediction uncertainty estimates."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ecg_electrolyte_regression.errors import CheckpointError, InvalidInputError
from ecg_electrolyte_regression.models.network import ElectrolyteNet
from ecg_electrolyte_regression.models.predictor import extract_features, predict_from_features
from ecg_electrolyte_regression.signal.records import ProcessedEcg
from ecg_electrolyte_regression.targets import TargetCodec
from ecg_electrolyte_regression.uncertainty.laplace import LaplacePosterior, laplace_variance


@dataclass(frozen=True)
class PredictiveDistribution:
    """Ensemble prediction in raw units.

    Attributes:
        mean: Average of the members' predicted means.
        aleatoric: Average predicted variance (Gaussian members only).
        epistemic_ensemble: Population variance of the members' means.
        epistemic_laplace: Average last-layer Laplace variance (when fitted).
    """

    mean: np.ndarray
    epistemic_ensemble: np.ndarray
    aleatoric: np.ndarray | None = None
    epistemic_laplace: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("epistemic_ensemble", "aleatoric", "epistemic_laplace"):
            value = getattr(self, name)
            if value is not None and np.any(value < 0):
                raise InvalidInputError(f"{name} contains negative variances")

    def uncertainties(self) -> dict[str, np.ndarray]:
        """Every available uncertainty, including the aleatoric + epistemic sums."""
        out = {"epistemic_ensemble": self.epistemic_ensemble}
        if self.aleatoric is not None:
            out["aleatoric"] = self.aleatoric
            out["aleatoric+ensemble"] = self.aleatoric + self.epistemic_ensemble
        if self.epistemic_laplace is not None:
            out["epistemic_laplace"] = self.epistemic_laplace
            if self.aleatoric is not None:
                out["aleatoric+laplace"] = self.aleatoric + self.epistemic_laplace
        return out


def _members_first(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def combine_members(
    means: np.ndarray,
    variances: np.ndarray | None = None,
    laplace: np.ndarray | None = None,
) -> PredictiveDistribution:
    """Reduce (M, N) member outputs to one distribution.

    A 1-D input is read as M members predicting a single point.

    Raises:
        InvalidInputError: For an empty member axis.
    """
    means = _members_first(means)
    if means.size == 0:
        raise InvalidInputError("Cannot combine an empty ensemble")
    return PredictiveDistribution(
        mean=means.mean(axis=0),
        epistemic_ensemble=means.var(axis=0),
        aleatoric=None if variances is None else _members_first(variances).mean(axis=0),
        epistemic_laplace=None if laplace is None else _members_first(laplace).mean(axis=0),
    )


@dataclass(frozen=True)
class EnsembleMember:
    model: ElectrolyteNet
    codec: TargetCodec
    seed: int
    laplace: LaplacePosterior | None = None


@dataclass(frozen=True)
class Ensemble:
    """Members sharing architecture, head and target codec, differing in seed."""

    members: tuple[EnsembleMember, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise InvalidInputError("An ensemble needs at least one member")
        first = self.members[0]
        for m in self.members[1:]:
            if m.model.backbone.cfg != first.model.backbone.cfg or m.model.kind != first.model.kind:
                raise CheckpointError("Ensemble members differ in architecture or head")
            if m.codec.to_dict() != first.codec.to_dict():
                raise CheckpointError("Ensemble members were trained with different target codecs")

    @classmethod
    def of(cls, members: Sequence[EnsembleMember]) -> Ensemble:
        return cls(members=tuple(members))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def codec(self) -> TargetCodec:
        return self.members[0].codec


@dataclass(frozen=True)
class MemberOutput:
    """Raw-unit outputs of one member on a batch."""

    mean: np.ndarray
    variance: np.ndarray | None
    laplace: np.ndarray | None


def member_outputs(
    member: EnsembleMember, x: ProcessedEcg | np.ndarray, batch_size: int = 64
) -> MemberOutput:
    """Mean, aleatoric variance and Laplace variance of one member.

    Laplace variances are mapped from the z-scale to squared raw units like the
    aleatoric term.
    """
    phi = extract_features(member.model, x, batch_size=batch_size)
    pred = predict_from_features(member.model, phi, member.codec)
    laplace = None
    if member.laplace is not None:
        z_var = laplace_variance(member.laplace, phi)
        laplace = np.asarray(member.codec.normalizer.invert_variance(z_var))
    return MemberOutput(mean=pred.mean, variance=pred.variance, laplace=laplace)


def combine_outputs(outputs: Sequence[MemberOutput]) -> PredictiveDistribution:
    """Combine member outputs; a variance kind is kept only if every member has it."""
    if not outputs:
        raise InvalidInputError("Cannot combine an empty ensemble")
    variances = [o.variance for o in outputs]
    laplace = [o.laplace for o in outputs]
    return combine_members(
        np.stack([o.mean for o in outputs]),
        np.stack(variances) if all(v is not None for v in variances) else None,
        np.stack(laplace) if all(v is not None for v in laplace) else None,
    )


def ensemble_predict(
    ens: Ensemble, x: ProcessedEcg | np.ndarray, batch_size: int = 64
) -> PredictiveDistribution:
    """Run every member on ``x`` and combine their outputs."""
    return combine_outputs([member_outputs(m, x, batch_size) for m in ens.members])


__all__ = [
    "Ensemble",
    "EnsembleMember",
    "MemberOutput",
    "PredictiveDistribution",
    "combine_members",
    "combine_outputs",
    "ensemble_predict",
    "member_outputs",
]
