"""Unit tests for the command-line surface and its argument checks."""

from pathlib import Path

import pytest

from ecg_electrolyte_regression.cli import (
    EXIT_USER_ERROR,
    UsageError,
    build_parser,
    main,
    parse_seeds,
)
from ecg_electrolyte_regression.errors import InvalidInputError
from ecg_electrolyte_regression.experiment import (
    check_head,
    checkpoint_name,
    perturbation_label,
    resolve_checkpoint_paths,
)
from ecg_electrolyte_regression.targets import BinaryTask

pytestmark = pytest.mark.unit

POTASSIUM_CONFIG = Path(__file__).parent.parent / "configs" / "potassium.toml"


class TestParseSeeds:
    """Tests for seed list expansion."""

    def test_range(self) -> None:
        """Test an inclusive range."""
        assert parse_seeds(["0-4"]) == [0, 1, 2, 3, 4]

    def test_lists_are_merged_and_sorted(self) -> None:
        """Test comma lists, separate values and duplicates."""
        assert parse_seeds(["3,1", "1", "7-8"]) == [1, 3, 7, 8]

    def test_invalid(self) -> None:
        """Test that malformed or empty seed lists are usage errors."""
        with pytest.raises(UsageError):
            parse_seeds(["a"])
        with pytest.raises(UsageError):
            parse_seeds([","])


class TestCheckHead:
    """Tests for head and class-count validation."""

    @pytest.mark.parametrize(
        ("head", "k"),
        [("ridge", 3), ("gaussian", 3), ("direct", 2), ("ordinal", None), ("classification", 1), ("tree", None)],
    )
    def test_rejected(self, head: str, k: int | None) -> None:
        """Test combinations that cannot be trained."""
        with pytest.raises(InvalidInputError):
            check_head(head, k)

    @pytest.mark.parametrize(("head", "k"), [("ridge", None), ("gaussian", None), ("ordinal", 2), ("classification", 5)])
    def test_accepted(self, head: str, k: int | None) -> None:
        """Test valid combinations."""
        check_head(head, k)


class TestNames:
    """Tests for checkpoint and perturbation labels."""

    def test_checkpoint_name(self) -> None:
        """Test names with and without class count and task."""
        assert checkpoint_name("gaussian", 3) == "gaussian-seed3.ckpt"
        assert checkpoint_name("ordinal", 0, k=5) == "ordinal-k5-seed0.ckpt"
        assert checkpoint_name("classification", 1, k=2, task=BinaryTask.HYPER) == (
            f"classification-k2-{BinaryTask.HYPER.value}-seed1.ckpt"
        )

    def test_perturbation_label(self) -> None:
        """Test clean, noise and mask labels."""
        assert perturbation_label() == "clean"
        assert perturbation_label(snr=10.0) == "snr-10"
        assert perturbation_label(snr=0.5) == "snr-0.5"
        assert perturbation_label(proportion=0.25) == "mask-25"

    def test_resolve_directory(self, tmp_path: Path) -> None:
        """Test that directories expand to the checkpoints inside."""
        (tmp_path / "b.ckpt").write_bytes(b"")
        (tmp_path / "a.ckpt").write_bytes(b"")
        (tmp_path / "notes.txt").write_text("x")
        assert resolve_checkpoint_paths([tmp_path]) == [tmp_path / "a.ckpt", tmp_path / "b.ckpt"]
        (tmp_path / "empty").mkdir()
        with pytest.raises(InvalidInputError, match="No checkpoints"):
            resolve_checkpoint_paths([tmp_path / "empty"])


class TestMain:
    """Tests for exit codes of the entry point."""

    def test_parser_defaults(self) -> None:
        """Test the default seeds and perturbation grid."""
        args = build_parser().parse_args(
            ["ood", "--manifest", "corpus", "--out", "reports", "--checkpoints", "ckpt"]
        )
        assert args.snr == [10.0, 1.0]
        assert args.mask == [0.25, 0.5, 0.75]
        assert args.split == "random-test"
        args = build_parser().parse_args(
            ["train", "--config", "c.toml", "--manifest", "m", "--head", "gaussian", "--out", "o"]
        )
        assert args.seeds == ["0-4"]

    def test_unknown_head(self, tmp_path: Path) -> None:
        """Test that an unknown head exits with a user error."""
        argv = ["train", "--config", str(POTASSIUM_CONFIG), "--manifest", str(tmp_path),
                "--head", "tree", "--out", str(tmp_path)]
        assert main(argv) == EXIT_USER_ERROR

    def test_ridge_with_classes(self, tmp_path: Path) -> None:
        """Test that --classes with the ridge head exits with a user error."""
        argv = ["train", "--config", str(POTASSIUM_CONFIG), "--manifest", str(tmp_path),
                "--head", "ridge", "--classes", "3", "--out", str(tmp_path)]
        assert main(argv) == EXIT_USER_ERROR
        assert not list(tmp_path.iterdir())

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test that a missing config file exits with a user error."""
        assert main(["gen-data", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path)]) == EXIT_USER_ERROR

    def test_empty_checkpoint_list(self, tmp_path: Path) -> None:
        """Test that evaluation without checkpoints exits with a user error."""
        assert main(["eval", "--manifest", str(tmp_path), "--out", str(tmp_path / "reports")]) == EXIT_USER_ERROR

    def test_ood_needs_a_perturbation(self, tmp_path: Path) -> None:
        """Test that empty --snr and --mask lists exit with a user error."""
        argv = ["ood", "--manifest", str(tmp_path), "--out", str(tmp_path), "--checkpoints", str(tmp_path),
                "--snr", "--mask"]
        assert main(argv) == EXIT_USER_ERROR

    def test_missing_subcommand(self) -> None:
        """Test that a bare invocation exits with a user error."""
        assert main([]) == EXIT_USER_ERROR

