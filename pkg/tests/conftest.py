"""Pytest configuration and shared fixtures."""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src directory to Python path for imports
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from ecg_electrolyte_regression.config import (  # noqa: E402
    BackboneConfig,
    ExperimentConfig,
    GeneratorConfig,
    TrainConfig,
)
from ecg_electrolyte_regression.models import ArrayDataset  # noqa: E402
from ecg_electrolyte_regression.signal import N_LEADS, RawEcg  # noqa: E402
from ecg_electrolyte_regression.synthdata import DatasetSplits, generate_dataset  # noqa: E402

TINY_LENGTH = 32


def sinusoid(frequency: float, fs: float, n: int, amplitude: float = 1.0) -> np.ndarray:
    """One lead of ``amplitude * sin(2 pi f t)`` sampled at ``fs``."""
    t = np.arange(n) / fs
    return amplitude * np.sin(2 * np.pi * frequency * t)


def sinusoid_ecg(frequency: float, fs: float = 400.0, n: int = 4096) -> RawEcg:
    """Eight identical sinusoidal leads."""
    return RawEcg(leads=np.tile(sinusoid(frequency, fs, n), (N_LEADS, 1)), fs=fs)


def brute_force_auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """O(n^2) AUROC counting ties as one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos, neg = scores[labels], scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (len(pos) * len(neg)))


def linear_dataset(n: int, rng: np.random.Generator, noise: float = 0.05) -> ArrayDataset:
    """Records whose mean amplitude determines the label linearly."""
    level = rng.normal(0.0, 1.0, size=n)
    x = rng.normal(0.0, 0.1, size=(n, N_LEADS, TINY_LENGTH)) + level[:, None, None]
    y = 4.5 + 0.5 * level + noise * rng.standard_normal(n)
    return ArrayDataset.from_arrays(x, y)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(0)


@pytest.fixture
def tiny_backbone_config() -> BackboneConfig:
    """Two small blocks over 32-sample records, no dropout."""
    return BackboneConfig(
        n_blocks=2,
        channels=(4, 4),
        kernel_size=3,
        downsample=(2, 2),
        dropout=0.0,
        input_length=TINY_LENGTH,
    )


@pytest.fixture
def tiny_dataset(rng: np.random.Generator) -> ArrayDataset:
    """48 tiny records with a learnable linear label."""
    return linear_dataset(48, rng)


@pytest.fixture
def small_generator_config() -> GeneratorConfig:
    """A 20-patient potassium corpus."""
    return GeneratorConfig(electrolyte="potassium", n_patients=20, seed=3)


@pytest.fixture
def small_splits(small_generator_config: GeneratorConfig) -> DatasetSplits:
    """Generated splits of the 20-patient corpus."""
    return generate_dataset(small_generator_config)


@pytest.fixture
def small_experiment_config(small_generator_config: GeneratorConfig) -> ExperimentConfig:
    """Experiment over the small corpus with a fast full-length backbone."""
    return ExperimentConfig(
        generator=small_generator_config,
        backbone=BackboneConfig(
            n_blocks=2, channels=(4, 4), kernel_size=3, downsample=(8, 8), dropout=0.0
        ),
        training=TrainConfig(epochs=2, batch_size=8),
    )


@pytest.fixture
def metadata_frame() -> pd.DataFrame:
    """Metadata for 40 examples with known ages and sexes."""
    return pd.DataFrame(
        {
            "patient_id": [f"p{i}" for i in range(40)],
            "age": np.linspace(20, 98, 40),
            "sex": ["M", "F"] * 20,
            "timestamp": pd.NaT,
        }
    )
