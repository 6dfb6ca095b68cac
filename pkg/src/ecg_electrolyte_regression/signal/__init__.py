"""ECG records, the preprocessing chain and record file formats."""

from ecg_electrolyte_regression.signal.filters import (
    IirFilterSpec,
    frequency_response,
    highpass_elliptic,
    notch,
    pad_to_length,
    preprocess,
    resample,
    zero_phase_filter,
)
from ecg_electrolyte_regression.signal.io import read_record, write_record
from ecg_electrolyte_regression.signal.records import (
    N_LEADS,
    TARGET_FS,
    TARGET_LENGTH,
    EcgMetadata,
    ProcessedEcg,
    RawEcg,
    stack_matrices,
)

__all__ = [
    "EcgMetadata",
    "IirFilterSpec",
    "N_LEADS",
    "ProcessedEcg",
    "RawEcg",
    "TARGET_FS",
    "TARGET_LENGTH",
    "frequency_response",
    "highpass_elliptic",
    "notch",
    "pad_to_length",
    "preprocess",
    "read_record",
    "resample",
    "stack_matrices",
    "write_record",
    "zero_phase_filter",
]
