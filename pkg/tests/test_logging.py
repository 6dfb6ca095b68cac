"""Unit tests for run context attached to log records."""

from collections.abc import Iterator
from pathlib import Path
from typing import Any

import pytest

from ecg_electrolyte_regression.config import ExperimentConfig
from ecg_electrolyte_regression.experiment import generate_corpus
from ecg_electrolyte_regression.logging_config import logger, run_context

pytestmark = pytest.mark.unit


@pytest.fixture
def records() -> Iterator[list[dict[str, Any]]]:
    """Records emitted while the test runs."""
    captured: list[dict[str, Any]] = []
    handler = logger.add(lambda message: captured.append(message.record), level="DEBUG")
    yield captured
    logger.remove(handler)


class TestRunContext:
    """Tests for binding corpus, checkpoint, split and perturbation to records."""

    def test_context_is_rendered(self, records: list[dict[str, Any]]) -> None:
        """Test that bound fields reach extra and the rendered prefix in order."""
        with run_context(perturbation="snr-1", corpus=Path("corpus"), split="random-test"):
            logger.info("inside")
        logger.info("outside")
        inside, outside = records
        assert inside["extra"]["corpus"] == "corpus"
        assert inside["extra"]["context"] == "[corpus=corpus split=random-test perturbation=snr-1] "
        assert outside["extra"]["context"] == ""
        assert "corpus" not in outside["extra"]

    def test_none_fields_are_skipped(self, records: list[dict[str, Any]]) -> None:
        """Test that optional context left as None is not bound."""
        with run_context(checkpoint="gaussian-seed0.ckpt", split=None):
            logger.info("x")
        assert records[0]["extra"]["context"] == "[checkpoint=gaussian-seed0.ckpt] "

    def test_nested_contexts_merge(self, records: list[dict[str, Any]]) -> None:
        """Test that an inner block adds to the outer context."""
        with run_context(corpus="c"), run_context(split="temporal-test"):
            logger.info("x")
        assert records[0]["extra"]["context"] == "[corpus=c split=temporal-test] "

    def test_unknown_field(self) -> None:
        """Test that a field outside the known set is rejected."""
        with pytest.raises(ValueError, match="Unknown log context"):
            run_context(model="x")

    def test_corpus_generation_logs_its_directory(
        self,
        records: list[dict[str, Any]],
        small_experiment_config: ExperimentConfig,
        tmp_path: Path,
    ) -> None:
        """Test that records logged while writing a corpus carry its directory."""
        out = tmp_path / "corpus"
        generate_corpus(small_experiment_config, out)
        written = [r for r in records if "Wrote corpus manifest" in r["message"]]
        assert len(written) == 1
        assert written[0]["extra"]["corpus"] == str(out)
