"""Unit and integration tests for the ECG electrolyte pipeline."""
