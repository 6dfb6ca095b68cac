"""Unit tests for the synthetic corpus generator."""

from datetime import timedelta

import numpy as np
import pytest

from ecg_electrolyte_regression.config import GeneratorConfig
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.signal import N_LEADS
from ecg_electrolyte_regression.synthdata import (
    SPLIT_NAMES,
    DatasetSplits,
    beat_template,
    concentration_from_qt,
    concentration_from_t_wave,
    draw_patient,
    drop_leaking_patients,
    generate_dataset,
    sample_concentration,
    split_sizes,
    synthesize_ecg,
    window_label,
)

pytestmark = pytest.mark.unit


class TestSplitSizes:
    """Tests for patient split proportions."""

    def test_seventy_twenty_ten(self) -> None:
        """Test the development / random-test / temporal-test proportions."""
        sizes = split_sizes(2000)
        assert sizes["train"] + sizes["validation"] == 1400
        assert sizes["random-test"] == 400
        assert sizes["temporal-test"] == 200
        assert sizes["validation"] == 210

    def test_too_few_patients(self) -> None:
        """Test that a corpus too small to fill every split is rejected."""
        with pytest.raises(InvalidInputError, match="too few"):
            split_sizes(3)


class TestConcentrations:
    """Tests for the label distribution."""

    def test_normal_moments(self, rng: np.random.Generator) -> None:
        """Test that potassium draws match the preset moments."""
        cfg = GeneratorConfig(electrolyte="potassium", n_patients=10, seed=0)
        draws = sample_concentration(cfg, rng, size=50_000)
        assert draws.mean() == pytest.approx(3.99, abs=0.01)
        assert draws.std() == pytest.approx(0.50, abs=0.01)

    def test_log_normal_moments(self, rng: np.random.Generator) -> None:
        """Test that creatinine draws are right-skewed with the preset mean."""
        cfg = GeneratorConfig(electrolyte="creatinine", n_patients=10, seed=0)
        draws = sample_concentration(cfg, rng, size=200_000)
        assert draws.mean() == pytest.approx(90.55, rel=0.03)
        assert np.median(draws) < draws.mean()

    def test_floor(self, rng: np.random.Generator) -> None:
        """Test that draws never fall below the physiologic floor."""
        cfg = GeneratorConfig(
            electrolyte="potassium", n_patients=10, seed=0, concentration_sd=3.0
        )
        draws = sample_concentration(cfg, rng, size=10_000)
        assert draws.min() >= cfg.concentration_floor

    def test_age_inflates_spread(self, rng: np.random.Generator) -> None:
        """Test that older patients draw from a wider distribution."""
        cfg = GeneratorConfig(electrolyte="potassium", n_patients=10, seed=0)
        young = sample_concentration(cfg, np.random.default_rng(1), age=18.0, size=20_000)
        old = sample_concentration(cfg, np.random.default_rng(1), age=100.0, size=20_000)
        assert old.std() > 1.3 * young.std()

    def test_calcium_two_sd_coverage(self, rng: np.random.Generator) -> None:
        """Test that 95.4% +/- 1% of calcium draws fall within 2.29 +/- 0.26."""
        cfg = GeneratorConfig(electrolyte="calcium", n_patients=10, seed=0)
        draws = sample_concentration(cfg, rng, size=10_000)
        inside = np.mean(np.abs(draws - 2.29) <= 0.26)
        assert inside == pytest.approx(0.954, abs=0.01)

    def test_vanishing_sd_collapses_to_mean(self, rng: np.random.Generator) -> None:
        """Test that as the sd shrinks every draw equals the mean."""
        cfg = GeneratorConfig(electrolyte="potassium", n_patients=10, seed=0, concentration_sd=1e-12)
        draws = sample_concentration(cfg, rng, size=1000)
        np.testing.assert_allclose(draws, 3.99, atol=1e-9)


class TestMorphology:
    """Tests for concentration-dependent beat morphology."""

    def test_t_wave_tracks_concentration(self, small_generator_config: GeneratorConfig) -> None:
        """Test that a higher concentration gives a taller T wave and shorter QT."""
        patient = draw_patient("P1", np.random.default_rng(4))
        low = beat_template(3.0, patient, small_generator_config)
        high = beat_template(5.0, patient, small_generator_config)
        assert high.t_wave_amplitude > low.t_wave_amplitude
        assert high.qt_interval < low.qt_interval

    def test_zero_coupling_gives_identical_records(self) -> None:
        """Test that without coupling the ECG carries no label information."""
        cfg = GeneratorConfig(
            electrolyte="calcium", n_patients=10, seed=0, t_wave_gain=0.0, qt_gain=0.0
        )
        patient = draw_patient("P1", np.random.default_rng(4))
        a = synthesize_ecg(2.0, patient, cfg, np.random.default_rng(9))
        b = synthesize_ecg(2.6, patient, cfg, np.random.default_rng(9))
        np.testing.assert_array_equal(a.leads, b.leads)

    def test_t_wave_amplitude_inverts_to_concentration(self) -> None:
        """Test that the T peak recovers the concentration exactly for every patient."""
        cfg = GeneratorConfig(electrolyte="potassium", n_patients=10, seed=0)
        rng = np.random.default_rng(11)
        for i in range(2000):
            patient = draw_patient(f"P{i}", rng)
            y = float(sample_concentration(cfg, rng, age=patient.age))
            template = beat_template(y, patient, cfg)
            assert patient.lead_gains[0] == 1.0
            assert concentration_from_t_wave(template.t_wave_amplitude, cfg) == pytest.approx(y, abs=1e-9)
            assert concentration_from_qt(template.qt_interval, cfg) == pytest.approx(y, abs=1e-9)

    def test_inversion_needs_coupling(self) -> None:
        """Test that a zero gain cannot be inverted."""
        cfg = GeneratorConfig(electrolyte="calcium", n_patients=10, seed=0, qt_gain=0.0)
        with pytest.raises(InvalidInputError, match="T-wave gain"):
            concentration_from_t_wave(0.3, cfg)
        with pytest.raises(InvalidInputError, match="QT gain"):
            concentration_from_qt(0.4, cfg)

    def test_uncoupled_records_are_uncorrelated_with_label(self) -> None:
        """Test that over 1000 draws no lead-I sample correlates with the concentration."""
        cfg = GeneratorConfig(
            electrolyte="calcium", n_patients=10, seed=0, t_wave_gain=0.0, qt_gain=0.0, duration_s=1.0
        )
        label_rng = np.random.default_rng(21)
        labels, leads = [], []
        for seed in range(1000):
            patient = draw_patient(f"P{seed}", np.random.default_rng(seed))
            y = float(sample_concentration(cfg, label_rng))
            mirrored = 2 * cfg.concentration_mean - y
            a = synthesize_ecg(y, patient, cfg, np.random.default_rng(seed + 5000))
            b = synthesize_ecg(mirrored, patient, cfg, np.random.default_rng(seed + 5000))
            np.testing.assert_array_equal(a.leads, b.leads)
            labels += [y, mirrored]
            leads += [a.leads[0], b.leads[0]]
        y_c = np.asarray(labels) - np.mean(labels)
        x_c = np.asarray(leads) - np.mean(leads, axis=0)
        corr = (y_c @ x_c) / (np.linalg.norm(y_c) * np.linalg.norm(x_c, axis=0))
        assert np.max(np.abs(corr)) < 0.05

    def test_rejects_non_positive_concentration(self, small_generator_config: GeneratorConfig) -> None:
        """Test that a non-positive concentration is rejected."""
        patient = draw_patient("P1", np.random.default_rng(4))
        with pytest.raises(InvalidInputError):
            beat_template(0.0, patient, small_generator_config)

    def test_synthesize_shape_and_determinism(self, small_generator_config: GeneratorConfig) -> None:
        """Test record shape and that the rng state fully determines it."""
        patient = draw_patient("P1", np.random.default_rng(4))
        a = synthesize_ecg(4.0, patient, small_generator_config, np.random.default_rng(5))
        b = synthesize_ecg(4.0, patient, small_generator_config, np.random.default_rng(5))
        assert a.leads.shape == (N_LEADS, 5000)
        assert a.fs == 500.0
        np.testing.assert_array_equal(a.leads, b.leads)


class TestGenerateDataset:
    """Tests for corpus generation and split invariants."""

    def test_patient_disjoint_splits(self, small_splits: DatasetSplits) -> None:
        """Test that no patient appears in two splits."""
        ids = [small_splits.patient_ids(name) for name in SPLIT_NAMES]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                assert not ids[i] & ids[j]

    def test_temporal_split_follows_development(self, small_splits: DatasetSplits) -> None:
        """Test that temporal-test records are strictly later than development records."""
        last_dev = max(ex.timestamp for ex in small_splits.development)
        assert all(ex.timestamp > last_dev for ex in small_splits.temporal_test)

    def test_one_record_per_patient_outside_training(self, small_splits: DatasetSplits) -> None:
        """Test that validation and test splits keep only the first ECG of each patient."""
        for name in ("validation", "random-test", "temporal-test"):
            examples = small_splits.split(name)
            assert len(examples) == len(small_splits.patient_ids(name))

    def test_labels_are_window_medians(self, small_splits: DatasetSplits) -> None:
        """Test that each label is the median of its lab draws and pairs within an hour."""
        for ex in small_splits.train:
            assert ex.y == pytest.approx(float(np.median(ex.lab_values)))
            assert abs(ex.timestamp - ex.lab_draw_timestamp) <= timedelta(minutes=60)

    def test_deterministic(self, small_generator_config: GeneratorConfig) -> None:
        """Test that the same seed regenerates the same corpus."""
        a = generate_dataset(small_generator_config)
        b = generate_dataset(small_generator_config)
        assert [ex.y for ex in a.train] == [ex.y for ex in b.train]
        np.testing.assert_array_equal(a.random_test[0].ecg.leads, b.random_test[0].ecg.leads)

    def test_bayes_optimal_mae(self, small_splits: DatasetSplits, small_generator_config: GeneratorConfig) -> None:
        """Test the emitted Bayes-optimal MAE of the window-median label noise."""
        assert small_splits.bayes_optimal_mae == pytest.approx(small_generator_config.bayes_optimal_mae)
        assert small_splits.bayes_optimal_mae < 0.10 * np.sqrt(2 / np.pi)

    def test_window_label_is_median(self) -> None:
        """Test that draws of 3.5, 4.1 and 5.0 label the window 4.1."""
        assert window_label([3.5, 4.1, 5.0]) == pytest.approx(4.1)
        assert window_label([5.0, 3.5]) == pytest.approx(4.25)
        with pytest.raises(InvalidInputError):
            window_label([])

    def test_unknown_split(self, small_splits: DatasetSplits) -> None:
        """Test that an unknown split name is rejected."""
        with pytest.raises(InvalidInputError):
            small_splits.split("test")

    def test_drop_leaking_patients(self, small_splits: DatasetSplits) -> None:
        """Test that temporal examples of known patients are removed."""
        leaked = small_splits.temporal_test[0].patient_id
        kept = drop_leaking_patients(small_splits.temporal_test, {leaked})
        assert leaked not in {ex.patient_id for ex in kept}
        assert len(kept) == len(small_splits.temporal_test) - 1
