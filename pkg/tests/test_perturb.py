"""Unit tests for out-of-distribution perturbations."""

import numpy as np
import pytest

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.perturb import (
    IDENTITY_SNR,
    add_noise_snr,
    mask,
    mask_matrix,
    noise_matrix,
    perturb_batch,
)
from ecg_electrolyte_regression.signal import N_LEADS, TARGET_LENGTH, EcgMetadata, ProcessedEcg

pytestmark = pytest.mark.unit


@pytest.fixture
def record(rng: np.random.Generator) -> ProcessedEcg:
    return ProcessedEcg(
        matrix=rng.normal(size=(N_LEADS, TARGET_LENGTH)), meta=EcgMetadata(patient_id="P1", age=50.0, sex="F")
    )


class TestNoise:
    """Tests for additive noise at a target SNR."""

    @pytest.mark.parametrize("snr", [10.0, 1.0, 0.1])
    def test_power_ratio(self, record: ProcessedEcg, snr: float) -> None:
        """Test that the added noise has power signal / snr."""
        noisy = add_noise_snr(record, snr, np.random.default_rng(1))
        noise = noisy.matrix - record.matrix
        ratio = np.mean(record.matrix**2) / np.mean(noise**2)
        assert ratio == pytest.approx(snr, rel=0.05)
        assert noisy.meta == record.meta

    def test_identity_snr(self, record: ProcessedEcg) -> None:
        """Test that an effectively infinite SNR leaves the record untouched."""
        assert add_noise_snr(record, IDENTITY_SNR, np.random.default_rng(1)) is record

    def test_zero_power_record(self) -> None:
        """Test that a silent record is returned unchanged."""
        silent = np.zeros((N_LEADS, 16))
        assert noise_matrix(silent, 10.0, np.random.default_rng(0)) is silent

    def test_rejects_non_positive_snr(self, record: ProcessedEcg) -> None:
        """Test that the SNR must be positive."""
        with pytest.raises(InvalidInputError):
            add_noise_snr(record, 0.0, np.random.default_rng(0))


class TestMask:
    """Tests for contiguous masking."""

    @pytest.mark.parametrize("proportion", [0.25, 0.5, 0.75])
    def test_width_and_contiguity(self, proportion: float) -> None:
        """Test that one contiguous segment of the expected width is zeroed in every lead."""
        ecg = ProcessedEcg(matrix=np.ones((N_LEADS, TARGET_LENGTH)))
        out = mask(ecg, proportion, np.random.default_rng(3))
        zeros = np.flatnonzero(out.matrix[0] == 0.0)
        assert zeros.size == round(proportion * TARGET_LENGTH)
        assert np.all(np.diff(zeros) == 1)
        assert np.all(out.matrix == out.matrix[0])
        assert np.all(ecg.matrix == 1.0)

    def test_extremes(self, record: ProcessedEcg) -> None:
        """Test that proportion 0 is the identity and 1 zeros everything."""
        assert mask(record, 0.0, np.random.default_rng(0)) is record
        assert np.all(mask(record, 1.0, np.random.default_rng(0)).matrix == 0.0)

    def test_rejects_invalid_proportion(self, record: ProcessedEcg) -> None:
        """Test that proportions outside [0, 1] are rejected."""
        with pytest.raises(InvalidInputError):
            mask(record, 1.5, np.random.default_rng(0))

    def test_start_is_random(self) -> None:
        """Test that different draws mask different positions."""
        starts = set()
        for seed in range(10):
            out = mask_matrix(np.ones((2, 100)), 0.1, np.random.default_rng(seed))
            starts.add(int(np.flatnonzero(out[0] == 0.0)[0]))
        assert len(starts) > 1


class TestPerturbBatch:
    """Tests for batch perturbation."""

    def test_each_record_gets_its_own_draw(self) -> None:
        """Test that records in a batch are masked independently."""
        x = np.ones((20, N_LEADS, 200), dtype=np.float32)
        out = perturb_batch(x, np.random.default_rng(0), proportion=0.1)
        assert out.shape == x.shape
        assert out.dtype == np.float32
        starts = {int(np.flatnonzero(rec[0] == 0.0)[0]) for rec in out}
        assert len(starts) > 1

    def test_noise_batch(self, rng: np.random.Generator) -> None:
        """Test that noisy batches differ from the input."""
        x = rng.normal(size=(3, N_LEADS, 50))
        out = perturb_batch(x, np.random.default_rng(0), snr=1.0)
        assert not np.allclose(out, x)

    def test_exactly_one_perturbation(self) -> None:
        """Test that exactly one of snr and proportion is required."""
        x = np.ones((1, N_LEADS, 10))
        with pytest.raises(InvalidInputError):
            perturb_batch(x, np.random.default_rng(0))
        with pytest.raises(InvalidInputError):
            perturb_batch(x, np.random.default_rng(0), snr=1.0, proportion=0.5)
