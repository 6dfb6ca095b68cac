"""Learnability and direction checks on noise-free synthetic corpora.

Every network here trains on corpora without ECG noise, baseline wander or
powerline hum, with one lab draw per window, so the generator's Bayes-optimal
MAE is exact. Training the full set of models takes tens of minutes on one
core; set ECG_ELECTROLYTE_WORKERS to fan seeds out over processes.

Run tests with: pytest tests/test_acceptance.py -v
Skip with: pytest tests/ -v -m "not slow"
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest

from ecg_electrolyte_regression.config import (
    BackboneConfig,
    ExperimentConfig,
    GeneratorConfig,
    TrainConfig,
)
from ecg_electrolyte_regression.evaluation.report import SUMMARY_FILE
from ecg_electrolyte_regression.experiment import (
    evaluate,
    evaluate_arrays,
    generate_corpus,
    load_checkpoints,
    run_ood,
    train_models,
)
from ecg_electrolyte_regression.models import to_arrays
from ecg_electrolyte_regression.store import CorpusStore
from ecg_electrolyte_regression.synthdata import SPLIT_NAMES, generate_dataset

pytestmark = [pytest.mark.integration, pytest.mark.slow]

N_PATIENTS = 800
GAUSSIAN_SEEDS = [0, 1, 2, 3, 4]
DIRECT_SEEDS = [0, 1]
CLASS_COUNTS = (2, 3, 5, 7)
# Single-seed class-sweep comparisons allow this much AUmROC noise.
AUMROC_SLACK = 0.01


def noise_free_config(seed: int = 17, **generator: Any) -> ExperimentConfig:
    return ExperimentConfig(
        generator=GeneratorConfig(
            electrolyte="potassium",
            n_patients=N_PATIENTS,
            seed=seed,
            ecg_noise_sd=0.0,
            baseline_wander_amplitude=0.0,
            powerline_amplitude=0.0,
            draws_per_patient=(1, 1),
            **generator,
        ),
        backbone=BackboneConfig(
            n_blocks=3, channels=(8, 16, 16), kernel_size=9, downsample=(4, 4, 4), dropout=0.0
        ),
        training=TrainConfig(epochs=15, batch_size=16),
    )


def read_summary(report_dir: Path) -> dict[str, Any]:
    return json.loads((report_dir / SUMMARY_FILE).read_text())["summary"]


@pytest.fixture(scope="module")
def coupled(tmp_path_factory: pytest.TempPathFactory) -> dict[str, Path]:
    """Noise-free potassium corpus with every head family trained on it."""
    root = tmp_path_factory.mktemp("coupled")
    config = noise_free_config()
    paths = {"corpus": root / "corpus", "checkpoints": root / "checkpoints", "reports": root / "reports"}
    generate_corpus(config, paths["corpus"])
    train = dict(config=config, manifest=paths["corpus"], out_dir=paths["checkpoints"])
    train_models(head="gaussian", seeds=GAUSSIAN_SEEDS, **train)
    train_models(head="direct", seeds=DIRECT_SEEDS, **train)
    for k in CLASS_COUNTS:
        train_models(head="ordinal", seeds=[0], k=k, **train)
        train_models(head="classification", seeds=[0], k=k, **train)
    evaluate([paths["checkpoints"]], paths["corpus"], ["random-test"], paths["reports"])
    return paths


@pytest.fixture(scope="module")
def report_dir(coupled: dict[str, Path]) -> Path:
    return coupled["reports"] / "random-test"


class TestLearnability:
    """Tests that coupled morphology is learnt and uncoupled morphology is not."""

    def test_gaussian_ensemble_near_bayes_optimal(self, report_dir: Path) -> None:
        """Test that the Gaussian ensemble MAE is within twice the Bayes-optimal MAE."""
        summary = read_summary(report_dir)
        assert summary["bayes_optimal_mae"] == pytest.approx(0.10 * np.sqrt(2 / np.pi))
        assert summary["ensemble_MAE"]["gaussian"] <= 2.0 * summary["bayes_optimal_mae"]

    def test_binary_auroc(self, report_dir: Path) -> None:
        """Test that k = 2 hypo/hyper classifiers reach AUROC 0.9 where both classes occur."""
        auroc = pd.read_csv(report_dir / "auroc.csv")
        binary = auroc[(auroc["k"] == 2) & auroc["AUROC"].notna()]
        assert "hypo" in set(binary["task"])
        assert (binary["AUROC"] >= 0.9).all()

    def test_uncoupled_morphology_predicts_the_mean(self, tmp_path: Path) -> None:
        """Test normalized MSE 1.0 +/- 0.1 when the ECG carries no label information."""
        config = noise_free_config(seed=23, t_wave_gain=0.0, qt_gain=0.0)
        store = CorpusStore(tmp_path / "corpus")
        generate_corpus(config, store.root)
        train_models(config, store.root, "gaussian", [0, 1], tmp_path / "checkpoints")
        checkpoints = load_checkpoints([tmp_path / "checkpoints"], store)
        sigma_y = float(np.std([ex.y for ex in store.read().train]))

        # A fresh 2000-patient cohort keeps the sampling error of the ratio small.
        held_out = generate_dataset(config.generator.model_copy(update={"n_patients": 2000, "seed": 29}))
        examples = [ex for name in SPLIT_NAMES for ex in held_out.split(name)]
        report = evaluate_arrays(
            checkpoints, to_arrays(examples), "uncoupled", sigma_y, held_out.bayes_optimal_mae
        )
        normalized = report.tables["regression"]["normalized MSE"].mean()
        assert normalized == pytest.approx(1.0, abs=0.1)


class TestSparsification:
    """Tests that removing uncertain predictions lowers the error."""

    def test_aleatoric_and_oracle(self, report_dir: Path) -> None:
        """Test aleatoric MAE at 25% below 100%, and a monotone oracle curve."""
        table = pd.read_csv(report_dir / "sparsification.csv")
        gaussian = table[table["head"] == "gaussian"]
        aleatoric = gaussian[gaussian["uncertainty"] == "aleatoric"].set_index("retained_fraction")["MAE"]
        assert aleatoric.loc[0.25] < aleatoric.loc[1.0]
        oracle = gaussian[gaussian["uncertainty"] == "oracle"].sort_values("retained_fraction")["MAE"]
        assert list(oracle) == sorted(oracle)
        assert len(oracle) == 4


class TestClassSweep:
    """Tests for AUmROC against class count and discretized against direct MAE."""

    def test_aumroc_non_increasing_in_k(self, report_dir: Path) -> None:
        """Test that both discretized heads lose AUmROC as k grows."""
        sweep = pd.read_csv(report_dir / "class_sweep.csv")
        for head in ("ordinal", "classification"):
            values = sweep[sweep["head"] == head].sort_values("k")["AUmROC"].to_numpy()
            assert len(values) == len(CLASS_COUNTS)
            assert np.all(np.diff(values) <= AUMROC_SLACK)

    def test_ordinal_at_least_classification_at_k7(self, report_dir: Path) -> None:
        """Test that the rank-consistent head is not worse at seven classes."""
        sweep = pd.read_csv(report_dir / "class_sweep.csv").set_index(["head", "k"])
        assert sweep.loc[("ordinal", 7), "AUmROC"] >= sweep.loc[("classification", 7), "AUmROC"] - AUMROC_SLACK

    def test_discretized_never_beats_direct(self, report_dir: Path) -> None:
        """Test that no discretized model has a lower MAE than direct regression."""
        regression = pd.read_csv(report_dir / "regression.csv")
        direct = regression.loc[regression["head"] == "direct", "MAE"].mean()
        discretized = regression[regression["head"].isin(["ordinal", "classification"])]
        assert len(discretized) > 0
        assert (discretized["MAE"] >= direct).all()


class TestOutOfDistribution:
    """Tests for error and uncertainty under perturbed test records."""

    @pytest.fixture(scope="class")
    def ood(self, coupled: dict[str, Path]) -> Path:
        out = coupled["reports"] / "perturbed"
        checkpoints = [coupled["checkpoints"] / f"gaussian-seed{s}.ckpt" for s in GAUSSIAN_SEEDS]
        run_ood(checkpoints, coupled["corpus"], "random-test", out, snrs=[10.0, 1.0], masks=[0.25, 0.5, 0.75])
        return out / "ood"

    def test_noise_raises_error_and_every_uncertainty(self, ood: Path) -> None:
        """Test strict increases from clean to SNR 10 to SNR 1 over the five-seed ensemble."""
        summaries = [read_summary(ood / label) for label in ("clean", "snr-10", "snr-1")]
        mae = [s["MAE"]["gaussian"]["mean"] for s in summaries]
        assert mae[0] < mae[1] < mae[2]
        for name in ("aleatoric", "epistemic_ensemble", "epistemic_laplace"):
            values = [s["uncertainty_means"]["gaussian"][name] for s in summaries]
            assert values[0] < values[1] < values[2], name

    def test_heavy_masking_raises_error(self, ood: Path) -> None:
        """Test that masking three quarters of each record loses accuracy.

        Uncertainty direction under masking is left unchecked: masked segments
        are zeros, which the networks can read as a flat and confident trace.
        """
        clean = read_summary(ood / "clean")["MAE"]["gaussian"]["mean"]
        masked = read_summary(ood / "mask-75")["MAE"]["gaussian"]["mean"]
        assert masked > clean
        table = pd.read_csv(ood / "ood.csv")
        assert list(table["perturbation"]) == ["clean", "snr-10", "snr-1", "mask-25", "mask-50", "mask-75"]
