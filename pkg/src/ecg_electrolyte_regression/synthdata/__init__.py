"""Synthetic labelled corpus standing in for hospital ECG/lab data."""

from ecg_electrolyte_regression.synthdata.dataset import (
    SPLIT_NAMES,
    DatasetSplits,
    EcgRecipe,
    LabeledExample,
    RecordSource,
    drop_leaking_patients,
    generate_dataset,
    split_sizes,
    window_label,
)
from ecg_electrolyte_regression.synthdata.generator import (
    BeatTemplate,
    PatientProfile,
    beat_template,
    concentration_from_qt,
    concentration_from_t_wave,
    draw_patient,
    sample_concentration,
    synthesize_ecg,
)

__all__ = [
    "BeatTemplate",
    "DatasetSplits",
    "EcgRecipe",
    "LabeledExample",
    "PatientProfile",
    "RecordSource",
    "SPLIT_NAMES",
    "beat_template",
    "concentration_from_qt",
    "concentration_from_t_wave",
    "draw_patient",
    "drop_leaking_patients",
    "generate_dataset",
    "sample_concentration",
    "split_sizes",
    "synthesize_ecg",
    "window_label",
]
