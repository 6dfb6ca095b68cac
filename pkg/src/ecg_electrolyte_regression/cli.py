"""Command-line interface: ``ecg-electrolyte {gen-data,train,eval,ood}``.

Exit codes: 0 on success, 1 for user errors (bad arguments, invalid input,
incompatible checkpoints), 2 for anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

from ecg_electrolyte_regression.config import load_config
from ecg_electrolyte_regression.errors import EcgElectrolyteError
from ecg_electrolyte_regression.experiment import (
    EVAL_SPLITS,
    HEAD_CHOICES,
    evaluate,
    generate_corpus,
    run_ood,
    train_models,
)
from ecg_electrolyte_regression.logging_config import configure_logging, logger
from ecg_electrolyte_regression.version import __version__

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2


class UsageError(EcgElectrolyteError):
    """Malformed command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_seeds(values: Sequence[str]) -> list[int]:
    """Expand ``["0-2", "7"]`` or ``["0,1"]`` into a sorted list of unique seeds."""
    seeds: set[int] = set()
    for value in values:
        for part in filter(None, value.split(",")):
            try:
                if "-" in part.lstrip("-"):
                    lo, hi = part.split("-", 1)
                    seeds.update(range(int(lo), int(hi) + 1))
                else:
                    seeds.add(int(part))
            except ValueError as e:
                raise UsageError(f"Invalid seed {part!r}") from e
    if not seeds:
        raise UsageError("No seeds given")
    return sorted(seeds)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecg-electrolyte", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="INFO", help="Log level (default: INFO)")
    parser.add_argument("--log-json", action="store_true", help="Emit JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen-data", help="Generate and write a synthetic corpus")
    gen.add_argument("--config", required=True, help="TOML experiment config")
    gen.add_argument("--out", required=True, help="Corpus directory")

    tr = sub.add_parser("train", help="Train one model per seed")
    tr.add_argument("--config", required=True, help="TOML experiment config")
    tr.add_argument("--manifest", required=True, help="Corpus manifest or directory")
    tr.add_argument("--head", required=True, choices=HEAD_CHOICES)
    tr.add_argument("--classes", type=int, default=None, help="Class count for discretized heads")
    tr.add_argument("--seeds", nargs="+", default=["0-4"], help="Seeds, e.g. 0-4 or 0 1 2")
    tr.add_argument("--out", required=True, help="Checkpoint directory")

    for name, help_text in (("eval", "Evaluate checkpoints on test splits"),
                            ("ood", "Evaluate checkpoints on perturbed records")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--checkpoints", nargs="*", default=[], help="Checkpoint files or directories")
        p.add_argument("--manifest", required=True, help="Corpus manifest or directory")
        p.add_argument("--out", required=True, help="Report directory")
        p.add_argument("--log-space", action="store_true", help="Score on log concentrations")
        if name == "eval":
            p.add_argument("--split", nargs="+", choices=EVAL_SPLITS, default=list(EVAL_SPLITS))
        else:
            p.add_argument("--split", choices=EVAL_SPLITS, default=EVAL_SPLITS[0])
            p.add_argument("--snr", nargs="*", type=float, default=[10.0, 1.0])
            p.add_argument("--mask", nargs="*", type=float, default=[0.25, 0.5, 0.75])
    return parser


def run(args: argparse.Namespace) -> None:
    if args.command == "gen-data":
        generate_corpus(load_config(args.config), args.out)
    elif args.command == "train":
        train_models(
            load_config(args.config),
            args.manifest,
            args.head,
            parse_seeds(args.seeds),
            args.out,
            k=args.classes,
        )
    elif args.command == "eval":
        evaluate(args.checkpoints, args.manifest, args.split, args.out, log_space=args.log_space)
    elif args.command == "ood":
        run_ood(
            args.checkpoints,
            args.manifest,
            args.split,
            args.out,
            snrs=args.snr,
            masks=args.mask,
            log_space=args.log_space,
        )


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the command and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level.upper(), serialize=args.log_json)
        run(args)
    except EcgElectrolyteError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USER_ERROR
    except Exception as e:
        logger.exception(f"Internal error: {e}")
        return EXIT_INTERNAL_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
