"""Unit tests for ECG records, the preprocessing chain and record formats."""

from datetime import datetime
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecg_electrolyte_regression.errors import FilterDesignError, InvalidInputError
from ecg_electrolyte_regression.signal import (
    N_LEADS,
    TARGET_LENGTH,
    EcgMetadata,
    IirFilterSpec,
    ProcessedEcg,
    RawEcg,
    frequency_response,
    highpass_elliptic,
    notch,
    pad_to_length,
    preprocess,
    read_record,
    resample,
    stack_matrices,
    write_record,
    zero_phase_filter,
)
from ecg_electrolyte_regression.signal.io import BINARY_MAGIC, dumps_binary, loads_binary, loads_text
from tests.conftest import sinusoid, sinusoid_ecg

pytestmark = pytest.mark.unit


def _bin_response(x: np.ndarray, y: np.ndarray, bin_index: int) -> complex:
    """Complex gain of ``x -> y`` at one FFT bin of the central 2048 samples."""
    middle = slice(1024, 3072)
    return np.fft.rfft(y[middle])[bin_index] / np.fft.rfft(x[middle])[bin_index]


class TestRecords:
    """Tests for record validation."""

    def test_rejects_wrong_lead_count(self) -> None:
        """Test that a record needs exactly eight leads."""
        with pytest.raises(InvalidInputError, match="8 leads"):
            RawEcg(leads=np.zeros((7, 100)), fs=500.0)

    def test_rejects_non_finite_samples(self) -> None:
        """Test that NaN samples are rejected."""
        leads = np.zeros((N_LEADS, 100))
        leads[3, 10] = np.nan
        with pytest.raises(InvalidInputError, match="non-finite"):
            RawEcg(leads=leads, fs=500.0)

    def test_rejects_empty_signal(self) -> None:
        """Test that a record with no samples is rejected."""
        with pytest.raises(InvalidInputError):
            RawEcg(leads=np.zeros((N_LEADS, 0)), fs=500.0)

    def test_processed_record_has_fixed_length(self) -> None:
        """Test that processed records hold 4096 samples per lead."""
        with pytest.raises(InvalidInputError, match="4096"):
            ProcessedEcg(matrix=np.zeros((N_LEADS, 4000)))

    def test_stack_matrices(self) -> None:
        """Test stacking processed records into a batch."""
        records = [ProcessedEcg(matrix=np.full((N_LEADS, TARGET_LENGTH), float(i))) for i in range(3)]
        batch = stack_matrices(records)
        assert batch.shape == (3, N_LEADS, TARGET_LENGTH)
        assert batch[2, 0, 0] == 2.0
        with pytest.raises(InvalidInputError):
            stack_matrices([])


class TestFilterResponse:
    """Frequency-domain checks of the high-pass and notch designs."""

    def test_highpass_attenuates_baseline_drift(self) -> None:
        """Test that 0.05 Hz is attenuated by at least 40 dB after forward-backward filtering."""
        w, db = frequency_response(IirFilterSpec.highpass(), n_points=1 << 16)
        idx = int(np.argmin(np.abs(w - 0.05)))
        assert 2 * db[idx] <= -40.0

    def test_highpass_passes_ten_hertz(self) -> None:
        """Test that 10 Hz passes within 1 dB after forward-backward filtering."""
        w, db = frequency_response(IirFilterSpec.highpass(), n_points=1 << 16)
        idx = int(np.argmin(np.abs(w - 10.0)))
        assert abs(2 * db[idx]) <= 1.0

    def test_notch_attenuates_powerline(self) -> None:
        """Test that 50 Hz is attenuated by at least 30 dB."""
        w, db = frequency_response(IirFilterSpec.powerline_notch(), n_points=4096)
        idx = int(np.argmin(np.abs(w - 50.0)))
        assert w[idx] == pytest.approx(50.0)
        assert 2 * db[idx] <= -30.0

    def test_fft_oracle_passband_gain_and_zero_phase(self) -> None:
        """Test passband gain and phase of a filtered on-bin sinusoid against its FFT."""
        ecg = sinusoid_ecg(100 * 400.0 / 4096)
        out = highpass_elliptic(ecg)
        gain = _bin_response(ecg.leads[0], out.leads[0], 50)
        assert abs(20 * np.log10(abs(gain))) <= 1.0
        assert abs(np.angle(gain)) < 0.05

    def test_fft_oracle_notch(self) -> None:
        """Test that the notch removes an on-bin 50 Hz tone by at least 30 dB."""
        ecg = sinusoid_ecg(50.0)
        out = notch(ecg)
        gain = _bin_response(ecg.leads[0], out.leads[0], 256)
        assert 20 * np.log10(abs(gain)) <= -30.0

    @pytest.mark.parametrize(
        "spec",
        [IirFilterSpec.highpass(), IirFilterSpec.powerline_notch()],
        ids=["highpass", "notch"],
    )
    def test_zero_phase_symmetry(self, spec: IirFilterSpec) -> None:
        """Test that a centred impulse yields a time-symmetric response."""
        x = np.zeros(40001)
        x[20000] = 1.0
        out = zero_phase_filter(x, spec, fs=400.0)
        assert np.max(np.abs(out - out[::-1])) < 1e-6

    def test_invalid_design_raises(self) -> None:
        """Test that a cut-off above Nyquist is a design error."""
        with pytest.raises(FilterDesignError):
            IirFilterSpec.highpass(frequency=300.0).design(400.0)


class TestResampleAndPad:
    """Tests for resampling and zero-padding."""

    def test_resample_length(self) -> None:
        """Test that 10 s at 500 Hz becomes 4000 samples at 400 Hz."""
        raw = RawEcg(leads=np.zeros((N_LEADS, 5000)), fs=500.0)
        out = resample(raw)
        assert out.fs == 400.0
        assert out.n_samples == 4000

    def test_resample_matching_rate_is_copy(self) -> None:
        """Test that resampling at the native rate returns the same samples."""
        raw = sinusoid_ecg(5.0)
        out = resample(raw)
        np.testing.assert_array_equal(out.leads, raw.leads)
        assert out.leads is not raw.leads

    def test_resample_preserves_low_frequency_tone(self) -> None:
        """Test that a 5 Hz tone survives 500 -> 400 Hz resampling."""
        raw = RawEcg(leads=np.tile(sinusoid(5.0, 500.0, 5000), (N_LEADS, 1)), fs=500.0)
        out = resample(raw)
        expected = sinusoid(5.0, 400.0, 4000)
        np.testing.assert_allclose(out.leads[0, 400:3600], expected[400:3600], atol=1e-3)

    def test_pad_appends_zeros(self) -> None:
        """Test that padding appends zeros at the end of each lead."""
        raw = RawEcg(leads=np.ones((N_LEADS, 4000)), fs=400.0)
        out = pad_to_length(raw)
        assert out.n_samples == TARGET_LENGTH
        assert np.all(out.leads[:, 4000:] == 0.0)
        assert np.all(out.leads[:, :4000] == 1.0)

    def test_pad_rejects_long_leads(self) -> None:
        """Test that longer leads are rejected, never truncated."""
        raw = RawEcg(leads=np.ones((N_LEADS, 5000)), fs=400.0)
        with pytest.raises(InvalidInputError, match="exceeds"):
            pad_to_length(raw)


class TestPreprocess:
    """Tests for the full preprocessing chain."""

    def test_output_shape_and_metadata(self) -> None:
        """Test that preprocessing yields 8 x 4096 and keeps the metadata."""
        meta = EcgMetadata(patient_id="P1", age=60.0, sex="F")
        raw = RawEcg(leads=np.random.default_rng(1).normal(size=(N_LEADS, 5000)), fs=500.0, meta=meta)
        out = preprocess(raw)
        assert out.matrix.shape == (N_LEADS, TARGET_LENGTH)
        assert out.meta == meta

    def test_removes_baseline_offset(self) -> None:
        """Test that a constant offset is removed by the high-pass."""
        leads = 2.0 + np.tile(sinusoid(10.0, 400.0, 4096), (N_LEADS, 1))
        out = preprocess(RawEcg(leads=leads, fs=400.0))
        assert abs(out.matrix[:, 1024:3072].mean()) < 0.05

    @settings(max_examples=15, deadline=None)
    @given(
        a=st.floats(-3, 3, allow_nan=False),
        b=st.floats(-3, 3, allow_nan=False),
        seed=st.integers(0, 2**16),
        fs=st.sampled_from([400.0, 500.0]),
    )
    def test_linearity(self, a: float, b: float, seed: int, fs: float) -> None:
        """Test that preprocess(a x + b y) equals a preprocess(x) + b preprocess(y)."""
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(N_LEADS, 1000))
        y = rng.normal(size=(N_LEADS, 1000))
        combined = preprocess(RawEcg(leads=a * x + b * y, fs=fs)).matrix
        separate = a * preprocess(RawEcg(leads=x, fs=fs)).matrix + b * preprocess(
            RawEcg(leads=y, fs=fs)
        ).matrix
        np.testing.assert_allclose(combined, separate, atol=1e-8 * (1 + np.abs(separate).max()))


class TestRecordFormats:
    """Tests for the text and binary record formats."""

    @pytest.fixture
    def record(self) -> RawEcg:
        meta = EcgMetadata(patient_id="P000007", age=71.5, sex="M", timestamp=datetime(2012, 3, 4, 5, 6))
        return RawEcg(leads=np.random.default_rng(2).normal(size=(N_LEADS, 250)), fs=500.0, meta=meta)

    @pytest.mark.parametrize("suffix", [".txt", ".ecg"])
    def test_write_then_read(self, tmp_path: Path, record: RawEcg, suffix: str) -> None:
        """Test that both formats restore samples, rate and metadata exactly."""
        path = write_record(record, tmp_path / f"rec{suffix}")
        restored = read_record(path)
        np.testing.assert_array_equal(restored.leads, record.leads)
        assert restored.fs == record.fs
        assert restored.meta == record.meta

    def test_binary_rejects_bad_magic(self, record: RawEcg) -> None:
        """Test that a wrong magic number is rejected."""
        payload = dumps_binary(record)
        assert payload.startswith(BINARY_MAGIC)
        with pytest.raises(InvalidInputError, match="magic"):
            loads_binary(b"NOTANECG" + payload[8:])

    def test_binary_rejects_truncated_body(self, record: RawEcg) -> None:
        """Test that a truncated body is rejected."""
        with pytest.raises(InvalidInputError):
            loads_binary(dumps_binary(record)[:-8])

    def test_text_requires_header(self) -> None:
        """Test that a text record without its header is rejected."""
        with pytest.raises(InvalidInputError, match="missing"):
            loads_text("0 0 0 0 0 0 0 0\n")

    def test_write_leaves_no_temp_files(self, tmp_path: Path, record: RawEcg) -> None:
        """Test that atomic writes clean up after themselves."""
        write_record(record, tmp_path / "a.ecg")
        assert [p.name for p in tmp_path.iterdir()] == ["a.ecg"]
