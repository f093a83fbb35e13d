"""Per-dialect corpus statistics in the Train/Val/Test + hours layout."""
from __future__ import annotations

from dataclasses import dataclass, field

from src.core.constants import DIALECT_CLASSES, SPLIT_NAMES
from src.core.errors import DataError
from src.corpus.manifest import CorpusManifest

UNLABELED = "(unlabeled)"


@dataclass
class DialectRow:
    dialect:      str
    count:        int = 0
    seconds:      float = 0.0
    split_counts: dict[str, int] = field(default_factory=dict)

    @property
    def hours(self) -> float:
        return self.seconds / 3600.0


@dataclass
class CorpusStats:
    rows:        list[DialectRow]
    total:       int
    hours:       float
    has_splits:  bool

    def row(self, dialect: str) -> DialectRow:
        for r in self.rows:
            if r.dialect == dialect:
                return r
        raise KeyError(dialect)


def corpus_stats(manifest: CorpusManifest) -> CorpusStats:
    if not manifest.samples:
        raise DataError("cannot compute statistics of an empty manifest")
    names = list(DIALECT_CLASSES)
    if any(s.dialect is None for s in manifest.samples):
        names.append(UNLABELED)
    rows = {name: DialectRow(name, split_counts={sp: 0 for sp in SPLIT_NAMES}) for name in names}

    total_seconds = 0.0
    for s in manifest.samples:
        row = rows[s.dialect if s.dialect is not None else UNLABELED]
        row.count += 1
        row.seconds += s.duration_seconds
        total_seconds += s.duration_seconds
        if manifest.split_assignment is not None:
            row.split_counts[manifest.split_assignment[s.id]] += 1

    return CorpusStats(list(rows.values()), len(manifest.samples), total_seconds / 3600.0,
                       manifest.split_assignment is not None)


def render_stats_table(stats: CorpusStats) -> str:
    """Plain-text table: Dialect | # samples | Train/Val/Test | # hours."""
    header = ["Dialect", "# samples", "Train/Val/Test", "# hours"]
    body = []
    for r in stats.rows:
        splits = "/".join(str(r.split_counts[sp]) for sp in SPLIT_NAMES) if stats.has_splits else "-"
        body.append([r.dialect, str(r.count), splits, f"{r.hours:.2f}"])
    totals = [sum(r.split_counts[sp] for r in stats.rows) for sp in SPLIT_NAMES]
    body.append(["Total", str(stats.total),
                 "/".join(map(str, totals)) if stats.has_splits else "-", f"{stats.hours:.2f}"])

    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    fmt = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(header), "-+-".join("-" * w for w in widths)]
    lines += [fmt(row) for row in body]
    return "\n".join(lines) + "\n"
