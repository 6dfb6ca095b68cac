"""Unit tests for PCA feature extraction."""

import numpy as np
import pytest

from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.features import (
    flatten,
    pca_fit,
    pca_inverse_transform,
    pca_transform,
)
from ecg_electrolyte_regression.signal import N_LEADS, TARGET_LENGTH, ProcessedEcg

pytestmark = pytest.mark.unit


@pytest.fixture
def spectrum_data(rng: np.random.Generator) -> np.ndarray:
    """60 samples in 40 dimensions with well separated principal variances."""
    basis, _ = np.linalg.qr(rng.normal(size=(40, 40)))
    scales = np.geomspace(10.0, 0.01, 40)
    return 3.0 + (rng.normal(size=(60, 40)) * scales) @ basis.T


class TestPcaFit:
    """Tests for fitting principal components."""

    def test_orthonormal_and_sorted(self, spectrum_data: np.ndarray) -> None:
        """Test that components are orthonormal and eigenvalues non-increasing."""
        model = pca_fit(spectrum_data, n_components=8)
        np.testing.assert_allclose(model.components @ model.components.T, np.eye(8), atol=1e-10)
        assert np.all(np.diff(model.eigenvalues) <= 0)
        assert model.explained_variance_ratio.sum() <= 1.0 + 1e-12

    def test_sign_convention(self, spectrum_data: np.ndarray) -> None:
        """Test that the largest-magnitude entry of each component is positive."""
        model = pca_fit(spectrum_data, n_components=5)
        idx = np.argmax(np.abs(model.components), axis=1)
        assert np.all(model.components[np.arange(5), idx] > 0)

    def test_lanczos_matches_dense(self, spectrum_data: np.ndarray) -> None:
        """Test that the iterative solver agrees with the dense SVD."""
        dense = pca_fit(spectrum_data, n_components=5)
        sparse = pca_fit(spectrum_data, n_components=5, max_dense_bytes=0)
        np.testing.assert_allclose(sparse.eigenvalues, dense.eigenvalues, rtol=1e-8)
        np.testing.assert_allclose(sparse.components, dense.components, atol=1e-6)

    def test_full_rank_reconstruction(self, spectrum_data: np.ndarray) -> None:
        """Test that keeping every component reconstructs the data."""
        model = pca_fit(spectrum_data, n_components=40)
        scores = pca_transform(model, spectrum_data)
        np.testing.assert_allclose(pca_inverse_transform(model, scores), spectrum_data, atol=1e-8)

    def test_mean_projects_to_origin(self, spectrum_data: np.ndarray) -> None:
        """Test that the training mean has zero scores."""
        model = pca_fit(spectrum_data, n_components=3)
        np.testing.assert_allclose(pca_transform(model, model.mean), 0.0, atol=1e-10)

    def test_too_many_components(self, spectrum_data: np.ndarray) -> None:
        """Test that more components than samples or dimensions is rejected."""
        with pytest.raises(InvalidInputError):
            pca_fit(spectrum_data, n_components=41)


class TestPcaRecords:
    """Tests for PCA over processed records."""

    def test_records_and_batches(self, rng: np.random.Generator) -> None:
        """Test projecting a single record and a batch of records."""
        records = [ProcessedEcg(matrix=rng.normal(size=(N_LEADS, TARGET_LENGTH))) for _ in range(6)]
        model = pca_fit(records, n_components=4)
        batch = flatten(records)
        assert batch.shape == (6, N_LEADS * TARGET_LENGTH)
        single = pca_transform(model, records[2])
        assert single.shape == (4,)
        np.testing.assert_allclose(pca_transform(model, batch)[2], single, atol=1e-10)

    def test_dimension_mismatch(self, rng: np.random.Generator) -> None:
        """Test that inputs of the wrong size are rejected."""
        model = pca_fit(rng.normal(size=(10, 6)), n_components=2)
        with pytest.raises(InvalidInputError):
            pca_transform(model, np.zeros((3, 5)))
