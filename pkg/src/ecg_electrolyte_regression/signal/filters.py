"""Preprocessing chain: resample, zero-pad, zero-phase high-pass and notch.

All functions are pure; records are immutable and every stage returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy import signal as sps

from ecg_electrolyte_regression.errors import FilterDesignError, InvalidInputError
from ecg_electrolyte_regression.logging_config import logger
from ecg_electrolyte_regression.signal.records import (
    TARGET_FS,
    TARGET_LENGTH,
    ProcessedEcg,
    RawEcg,
)

KAISER_BETA = 8.6
TAPS_PER_PHASE = 64


@dataclass(frozen=True)
class IirFilterSpec:
    """Design parameters of one IIR stage.

    The elliptic high-pass defaults to order 3 with 0.5 dB passband ripple and
    40 dB stopband attenuation at a 0.8 Hz edge. The notch is a second-order
    section with bandwidth ``frequency / quality_factor``.

    Attributes:
        kind: "elliptic-highpass" or "notch".
        frequency: Cut-off (high-pass) or centre (notch) frequency in Hz.
        order: Filter order; fixed at 2 for the notch.
        passband_ripple_db: Elliptic passband ripple.
        stopband_attenuation_db: Elliptic stopband attenuation.
        quality_factor: Notch quality factor.
    """

    kind: Literal["elliptic-highpass", "notch"]
    frequency: float
    order: int = 3
    passband_ripple_db: float = 0.5
    stopband_attenuation_db: float = 40.0
    quality_factor: float = 30.0

    @classmethod
    def highpass(cls, frequency: float = 0.8) -> IirFilterSpec:
        return cls(kind="elliptic-highpass", frequency=frequency)

    @classmethod
    def powerline_notch(cls, frequency: float = 50.0, quality_factor: float = 30.0) -> IirFilterSpec:
        return cls(kind="notch", frequency=frequency, order=2, quality_factor=quality_factor)

    @property
    def edge_padding(self) -> int:
        """Odd-extension length used by forward-backward filtering."""
        return 3 * (self.order + 1)

    def design(self, fs: float) -> np.ndarray:
        """Second-order sections of this filter at sampling rate ``fs``.

        Raises:
            FilterDesignError: If the design is invalid or unstable.
        """
        if not 0 < self.frequency < fs / 2:
            raise FilterDesignError(
                f"{self.kind} frequency {self.frequency} Hz must lie in (0, {fs / 2}) Hz"
            )
        if self.kind == "elliptic-highpass":
            sos = sps.ellip(
                self.order,
                self.passband_ripple_db,
                self.stopband_attenuation_db,
                self.frequency,
                btype="highpass",
                output="sos",
                fs=fs,
            )
        elif self.kind == "notch":
            b, a = sps.iirnotch(self.frequency, self.quality_factor, fs=fs)
            sos = sps.tf2sos(b, a)
        else:
            raise FilterDesignError(f"Unknown filter kind: {self.kind}")

        _, poles, _ = sps.sos2zpk(sos)
        if poles.size and np.max(np.abs(poles)) >= 1.0:
            raise FilterDesignError(
                f"{self.kind} design at fs={fs} is unstable (max |pole| = {np.max(np.abs(poles)):.6f})"
            )
        return sos


def frequency_response(
    spec: IirFilterSpec, fs: float = TARGET_FS, n_points: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """Single-pass magnitude response of a filter spec.

    Returns:
        Frequencies (Hz) and magnitude (dB). Forward-backward application
        doubles the dB values.
    """
    w, h = sps.sosfreqz(spec.design(fs), worN=n_points, fs=fs)
    return w, 20.0 * np.log10(np.abs(h) + 1e-300)


def zero_phase_filter(x: np.ndarray, spec: IirFilterSpec, fs: float) -> np.ndarray:
    """Apply ``spec`` forward and backward along the last axis."""
    sos = spec.design(fs)
    padlen = min(spec.edge_padding, x.shape[-1] - 1)
    out = sps.sosfiltfilt(sos, x, axis=-1, padtype="odd", padlen=padlen)
    if not np.all(np.isfinite(out)):
        raise FilterDesignError(f"{spec.kind} produced non-finite output")
    return out


def _rational_ratio(target_fs: float, fs: float) -> tuple[int, int]:
    ratio = (Fraction(str(target_fs)) / Fraction(str(fs))).limit_denominator(10_000)
    return ratio.numerator, ratio.denominator


def resample(raw: RawEcg, target_fs: float = TARGET_FS) -> RawEcg:
    """Polyphase resampling to ``target_fs`` with a Kaiser-windowed sinc.

    The output holds ``round(n_in * target_fs / fs_in)`` samples per lead.

    Args:
        raw: Input record.
        target_fs: Output sampling rate in Hz.

    Returns:
        The resampled record; an unchanged copy when the rates already match.
    """
    if not np.isfinite(target_fs) or target_fs <= 0:
        raise InvalidInputError(f"Target sampling rate must be positive, got {target_fs}")
    if raw.fs == target_fs:
        return raw.with_leads(raw.leads.copy())

    up, down = _rational_ratio(target_fs, raw.fs)
    n_taps = TAPS_PER_PHASE * max(up, down) + 1
    taps = sps.firwin(n_taps, 1.0 / max(up, down), window=("kaiser", KAISER_BETA))
    out = sps.resample_poly(raw.leads, up, down, axis=-1, window=taps)

    n_out = int(round(raw.n_samples * target_fs / raw.fs))
    if n_out < 1:
        raise InvalidInputError(f"Resampling {raw.n_samples} samples leaves an empty signal")
    if out.shape[-1] >= n_out:
        out = out[:, :n_out]
    else:
        out = np.pad(out, ((0, 0), (0, n_out - out.shape[-1])))
    return raw.with_leads(out, fs=target_fs)


def pad_to_length(sig: RawEcg, n: int = TARGET_LENGTH) -> RawEcg:
    """Append zeros so every lead holds exactly ``n`` samples.

    Raises:
        InvalidInputError: If the record is already longer than ``n``; longer
            records are rejected, never truncated.
    """
    if sig.n_samples > n:
        raise InvalidInputError(f"Lead length {sig.n_samples} exceeds padding length {n}")
    if sig.n_samples == n:
        return sig
    return sig.with_leads(np.pad(sig.leads, ((0, 0), (0, n - sig.n_samples))))


def highpass_elliptic(sig: RawEcg, spec: IirFilterSpec | None = None) -> RawEcg:
    """Remove baseline and DC with a zero-phase elliptic high-pass."""
    spec = spec or IirFilterSpec.highpass()
    return sig.with_leads(zero_phase_filter(sig.leads, spec, sig.fs))


def notch(sig: RawEcg, spec: IirFilterSpec | None = None) -> RawEcg:
    """Suppress powerline hum with a zero-phase notch."""
    spec = spec or IirFilterSpec.powerline_notch()
    return sig.with_leads(zero_phase_filter(sig.leads, spec, sig.fs))


def preprocess(
    raw: RawEcg,
    highpass_spec: IirFilterSpec | None = None,
    notch_spec: IirFilterSpec | None = None,
) -> ProcessedEcg:
    """Full chain: resample to 400 Hz, pad to 4096, high-pass, notch.

    Padding happens at the end of each lead and before filtering.

    Args:
        raw: Input record (exactly 8 leads).
        highpass_spec: Override for the default high-pass.
        notch_spec: Override for the default notch.

    Returns:
        The 8 x 4096 model input.
    """
    sig = resample(raw, TARGET_FS)
    logger.debug(f"Resampled {raw.n_samples} samples @ {raw.fs} Hz -> {sig.n_samples} @ {sig.fs} Hz")
    sig = pad_to_length(sig, TARGET_LENGTH)
    sig = highpass_elliptic(sig, highpass_spec)
    sig = notch(sig, notch_spec)
    return ProcessedEcg(matrix=sig.leads, meta=raw.meta)


__all__ = [
    "IirFilterSpec",
    "frequency_response",
    "highpass_elliptic",
    "notch",
    "pad_to_length",
    "preprocess",
    "resample",
    "zero_phase_filter",
]
