"""Exception hierarchy shared by every subpackage.

Each class carries an ``exit_code`` that the CLI returns when the error
escapes a subcommand:

  2  configuration / usage
  3  data
  4  numerical divergence
  1  anything else (programming errors in graph use)
"""
from __future__ import annotations


class DialectAdvError(Exception):
    """Root of all errors raised by this package."""
    exit_code = 1


# ---------------------------------------------------------------------------
# Configuration / usage
# ---------------------------------------------------------------------------

class ConfigError(DialectAdvError):
    exit_code = 2


class CoefficientError(ConfigError):
    """Negative or out-of-range adversarial coefficient."""


class UsageError(ConfigError):
    """A required command-line input is missing."""

    def __init__(self, flag: str, message: str = "") -> None:
        self.flag = flag
        super().__init__(message or f"missing required input {flag}")


# ---------------------------------------------------------------------------
# Graph / tensor misuse
# ---------------------------------------------------------------------------

class TensorError(DialectAdvError):
    pass


class DimensionError(TensorError):
    exit_code = 3


class EmptySequenceError(TensorError):
    exit_code = 3


class RankError(TensorError):
    pass


class GraphReuseError(TensorError):
    pass


class StateError(TensorError):
    pass


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------

class DataError(DialectAdvError):
    exit_code = 3

    def __init__(self, message: str, sample_id: str | None = None) -> None:
        self.sample_id = sample_id
        super().__init__(message)


class LabelError(DataError):
    def __init__(self, message: str, index: int | None = None) -> None:
        self.index = index
        super().__init__(message)


class ManifestParseError(DataError):
    def __init__(self, line_num: int, message: str) -> None:
        self.line_num = line_num
        super().__init__(f"line {line_num}: {message}")


class IntegrityError(DataError):
    pass


class InfeasibleSplitError(DataError):
    pass


class UndefinedMetricError(DataError):
    pass


class ArtifactIOError(DataError):
    def __init__(self, path, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# Numerical divergence
# ---------------------------------------------------------------------------

class DivergenceError(DialectAdvError):
    exit_code = 4

    def __init__(self, message: str, step: int | None = None) -> None:
        self.step = step
        suffix = f" (step {step})" if step is not None else ""
        super().__init__(message + suffix)
