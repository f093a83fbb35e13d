"""Classification metrics, confusion matrices and the report JSON.

Precision, recall and F1 are macro-averaged over classes with positive
support (true count > 0).  Zero-support classes are flagged and excluded.
Confusion rows are percentages of each true class.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from src.core.errors import ArtifactIOError, DataError, LabelError
from src.utils.atomic import write_text_atomic


@dataclass
class ClassMetrics:
    precision: float
    recall:    float
    f1:        float
    support:   int


@dataclass
class EvalReport:
    accuracy:      float
    precision:     float
    recall:        float
    f1:            float
    confusion:     list[list[float]]
    per_class:     list[ClassMetrics]
    zero_support:  list[int] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.per_class)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            accuracy=data["accuracy"], precision=data["precision"], recall=data["recall"], f1=data["f1"],
            confusion=[list(row) for row in data["confusion"]],
            per_class=[ClassMetrics(**c) for c in data["per_class"]],
            zero_support=list(data.get("zero_support", [])),
        )


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def confusion_counts(predictions: Sequence[int], labels: Sequence[int], num_classes: int) -> np.ndarray:
    """Rows: true class; columns: predicted class."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise DataError(f"{pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise DataError("cannot evaluate zero predictions")
    for arr in (pred, true):
        bad = np.flatnonzero((arr < 0) | (arr >= num_classes))
        if bad.size:
            raise LabelError(f"class {int(arr[bad[0]])} at index {int(bad[0])} outside [0, {num_classes})",
                             index=int(bad[0]))
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return counts


def evaluate(predictions: Sequence[int], labels: Sequence[int], num_classes: int) -> EvalReport:
    counts = confusion_counts(predictions, labels, num_classes)
    n = int(counts.sum())
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    per_class: list[ClassMetrics] = []
    for c in range(num_classes):
        tp = int(counts[c, c])
        p = tp / predicted[c] if predicted[c] else 0.0
        r = tp / support[c] if support[c] else 0.0
        per_class.append(ClassMetrics(float(p), float(r), _f1(p, r), int(support[c])))

    active = [c for c in range(num_classes) if support[c] > 0]
    confusion = [[100.0 * counts[c, j] / support[c] if support[c] else 0.0 for j in range(num_classes)]
                 for c in range(num_classes)]
    return EvalReport(
        accuracy=float(np.trace(counts)) / n,
        precision=float(np.mean([per_class[c].precision for c in active])),
        recall=float(np.mean([per_class[c].recall for c in active])),
        f1=float(np.mean([per_class[c].f1 for c in active])),
        confusion=confusion,
        per_class=per_class,
        zero_support=[c for c in range(num_classes) if support[c] == 0],
    )


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def dumps_confusion(report: EvalReport, class_names: Sequence[str]) -> str:
    if len(class_names) != report.num_classes:
        raise DataError(f"{len(class_names)} class names for {report.num_classes} classes")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["true\\pred", *class_names])
    for name, row in zip(class_names, report.confusion):
        writer.writerow([name, *(f"{v:.1f}" for v in row)])
    return buf.getvalue()


def confusion_csv(report: EvalReport, class_names: Sequence[str], path: Path) -> None:
    write_text_atomic(Path(path), dumps_confusion(report, class_names))


def read_confusion_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ArtifactIOError(path, f"cannot read confusion matrix: {exc}") from exc
    names = rows[0][1:]
    return names, [[float(v) for v in row[1:]] for row in rows[1:]]


def dumps_report(report: EvalReport, **extra) -> str:
    return json.dumps({**extra, "report": report.to_dict()}, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: EvalReport, path: Path, **extra) -> None:
    write_text_atomic(Path(path), dumps_report(report, **extra))


def read_report(path: Path) -> tuple[EvalReport, dict]:
    """Report plus the extra top-level fields written alongside it."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactIOError(path, f"cannot read report: {exc}") from exc
    extra = {k: v for k, v in data.items() if k != "report"}
    return EvalReport.from_dict(data["report"]), extra
