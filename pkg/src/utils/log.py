"""Log plumbing.

Library code reports through a ``LogFn`` callback ``(level, message)``;
the CLI binds it to the standard ``logging`` module here.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Callable

LogFn = Callable[[str, str], None]   # (level, message)

SUCCESS = 25
logging.addLevelName(SUCCESS, "SUCCESS")

_LEVELS: dict[str, int] = {
    "DEBUG":   logging.DEBUG,
    "INFO":    logging.INFO,
    "SUCCESS": SUCCESS,
    "WARNING": logging.WARNING,
    "ERROR":   logging.ERROR,
}

_FORMAT  = "[%(asctime)s.%(msecs)03d] [%(levelname)-7s] %(message)s"
_DATEFMT = "%H:%M:%S"
_ROOT    = "dialect_adv"


def null_log(level: str, message: str) -> None:
    """Default sink: drop everything."""


def configure_logging(level: str = "INFO", log_dir: Path | None = None) -> logging.Logger:
    """Attach a stderr handler (and a file handler when ``log_dir`` is set)."""
    logger = logging.getLogger(_ROOT)
    logger.setLevel(_LEVELS.get(level.upper(), logging.INFO))
    logger.handlers.clear()
    logger.propagate = False

    formatter = logging.Formatter(_FORMAT, datefmt=_DATEFMT)
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(formatter)
    logger.addHandler(console)

    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / "run.log", encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    return logger


def make_log_fn(name: str = "") -> LogFn:
    """Return a ``LogFn`` writing to the package logger (or a child of it)."""
    logger = logging.getLogger(f"{_ROOT}.{name}" if name else _ROOT)

    def log(level: str, message: str) -> None:
        logger.log(_LEVELS.get(level.upper(), logging.INFO), message)

    return log
