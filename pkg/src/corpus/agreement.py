"""Inter-rater agreement on ordinal ratings."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.core.errors import ArtifactIOError, ConfigError, DataError, UndefinedMetricError


@dataclass
class RaterTable:
    """Paired ordinal ratings ``(item_id, rating_a, rating_b)`` over K classes."""
    num_classes: int
    items:       list[tuple[str, int, int]] = field(default_factory=list)

    def validate(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 rating classes, got {self.num_classes}")
        if not self.items:
            raise DataError("rater table is empty")
        for item_id, a, b in self.items:
            for r in (a, b):
                if not 0 <= r < self.num_classes:
                    raise DataError(f"item {item_id!r}: rating {r} outside [0, {self.num_classes})",
                                    sample_id=item_id)

    def observed(self) -> np.ndarray:
        """K x K joint histogram; rows are rater A, columns rater B."""
        self.validate()
        o = np.zeros((self.num_classes, self.num_classes))
        for _, a, b in self.items:
            o[a, b] += 1
        return o

    @classmethod
    def from_matrix(cls, matrix) -> "RaterTable":
        """Expand a joint histogram of non-negative integer counts into items."""
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DataError(f"joint histogram must be square, got shape {m.shape}")
        if np.any(m < 0) or np.any(m != np.round(m)):
            raise DataError("joint histogram must hold non-negative integer counts")
        items = []
        for a in range(m.shape[0]):
            for b in range(m.shape[1]):
                items += [(f"{a}-{b}-{k}", a, b) for k in range(int(m[a, b]))]
        return cls(m.shape[0], items)


def qwk(table: RaterTable) -> float:
    """Quadratic weighted kappa."""
    o = table.observed()
    k = table.num_classes
    n = o.sum()
    e = np.outer(o.sum(axis=1), o.sum(axis=0)) / n
    i, j = np.indices((k, k))
    w = (i - j) ** 2 / (k - 1) ** 2
    denom = float((w * e).sum())
    if denom == 0.0:
        raise UndefinedMetricError("kappa is undefined: both raters use one identical class only")
    return 1.0 - float((w * o).sum()) / denom


def percent_agreement(table: RaterTable) -> float:
    """Fraction of items on which both raters give the same class."""
    table.validate()
    return sum(1 for _, a, b in table.items if a == b) / len(table.items)


def read_rater_csv(path: Path, num_classes: int) -> RaterTable:
    """CSV with header ``item_id,rating_a,rating_b``."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
    except OSError as exc:
        raise ArtifactIOError(path, f"cannot read ratings: {exc}") from exc
    items = []
    for line_num, row in enumerate(rows, start=2):
        try:
            items.append((row["item_id"], int(row["rating_a"]), int(row["rating_b"])))
        except (KeyError, TypeError, ValueError):
            raise DataError(f"{path}: line {line_num}: expected item_id,rating_a,rating_b") from None
    table = RaterTable(num_classes, items)
    table.validate()
    return table
