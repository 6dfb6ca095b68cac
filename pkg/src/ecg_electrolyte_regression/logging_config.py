"""Logging configuration for the ECG electrolyte pipeline.

This module configures loguru for the package. Records carry the run context
(corpus directory, checkpoint, split, perturbation) bound with `run_context`;
pretty output prefixes it to the message and JSON output keeps it in ``extra``.
"""

import sys
from contextlib import AbstractContextManager
from pathlib import Path
from typing import Any

from loguru import logger

CONTEXT_FIELDS = ("corpus", "checkpoint", "split", "perturbation")

_PRETTY_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<magenta>{extra[context]}</magenta><level>{message}</level>"
)


def _render_context(record: Any) -> None:
    extra = record["extra"]
    fields = [f"{key}={extra[key]}" for key in CONTEXT_FIELDS if key in extra]
    extra["context"] = f"[{' '.join(fields)}] " if fields else ""


def run_context(**fields: str | Path | None) -> AbstractContextManager[None]:
    """Attach run context to every record logged inside the ``with`` block.

    None values are skipped, so optional context can be passed through as is.

    Raises:
        ValueError: For a field outside `CONTEXT_FIELDS`.
    """
    unknown = set(fields) - set(CONTEXT_FIELDS)
    if unknown:
        raise ValueError(f"Unknown log context fields {sorted(unknown)}; expected {CONTEXT_FIELDS}")
    return logger.contextualize(**{key: str(value) for key, value in fields.items() if value is not None})


def configure_logging(level: str = "INFO", serialize: bool = False) -> None:
    """Configure logging for the package.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        serialize: If True, output JSON logs instead of formatted text
    """
    logger.remove()
    logger.configure(patcher=_render_context)

    if serialize:
        # JSON lines; run context lands in record.extra
        logger.add(
            sys.stderr,
            format="{message}",
            level=level,
            serialize=True,
        )
    else:
        logger.add(
            sys.stderr,
            format=_PRETTY_FORMAT,
            level=level,
            colorize=True,
        )


# Default configuration
configure_logging()

__all__ = ["CONTEXT_FIELDS", "configure_logging", "logger", "run_context"]
