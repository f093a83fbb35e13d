"""Transcript statistics: per-class TF-IDF and token counts.

Each class is one aggregate document:

    tf(t, c) = count(t in c) / tokens in c
    idf(t)   = ln(N_classes / classes containing t)
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from src.core.errors import DataError
from src.core.roles import Attribute
from src.corpus.manifest import CorpusManifest

Tokenizer = Callable[[str], list[str]]


def whitespace_tokenizer(text: str) -> list[str]:
    return text.split()


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------

def _class_counts(docs: Iterable[tuple[str, Sequence[str]]]) -> dict[str, Counter]:
    counts: dict[str, Counter] = {}
    for label, tokens in docs:
        counts.setdefault(label, Counter()).update(tokens)
    return counts


def tfidf_scores(docs: Iterable[tuple[str, Sequence[str]]]) -> dict[str, dict[str, float]]:
    """``{class: {term: score}}`` for every term seen in the class."""
    counts = _class_counts(docs)
    if len(counts) < 2:
        raise DataError(f"TF-IDF needs at least 2 classes, got {len(counts)}")
    for label, c in counts.items():
        if sum(c.values()) == 0:
            raise DataError(f"class {label!r} has no tokens")

    n_classes = len(counts)
    df = Counter(term for c in counts.values() for term in c)
    idf = {term: math.log(n_classes / n) for term, n in df.items()}
    scores = {}
    for label, c in counts.items():
        total = sum(c.values())
        scores[label] = {term: (n / total) * idf[term] for term, n in c.items()}
    return scores


def tfidf_top_terms(docs: Iterable[tuple[str, Sequence[str]]], k: int = 10) -> dict[str, list[tuple[str, float]]]:
    """Top ``k`` positive-score terms per class, by score then term."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    out = {}
    for label, table in sorted(tfidf_scores(docs).items()):
        ranked = sorted(((t, s) for t, s in table.items() if s > 0), key=lambda ts: (-ts[1], ts[0]))
        out[label] = ranked[:k]
    return out


def manifest_documents(manifest: CorpusManifest, attribute: Attribute = Attribute.DIALECT,
                       tokenizer: Tokenizer = whitespace_tokenizer) -> list[tuple[str, list[str]]]:
    docs = []
    for s in manifest.samples:
        if s.transcript is None:
            raise DataError(f"sample {s.id!r} has no transcript", sample_id=s.id)
        label = s.label(attribute)
        if label is None:
            raise DataError(f"sample {s.id!r} has no {attribute.value} label", sample_id=s.id)
        docs.append((label, tokenizer(s.transcript)))
    return docs


def dumps_tfidf(top: dict[str, list[tuple[str, float]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "word", "score"])
    for label, rows in top.items():
        for term, score in rows:
            writer.writerow([label, term, f"{score:.6f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Token counts
# ---------------------------------------------------------------------------

@dataclass
class TokenRow:
    label:   str
    samples: int
    tokens:  int

    @property
    def average(self) -> float:
        return self.tokens / self.samples if self.samples else 0.0


def token_stats(manifest: CorpusManifest, tokenizer: Tokenizer = whitespace_tokenizer,
                attribute: Attribute = Attribute.DIALECT) -> tuple[list[TokenRow], TokenRow]:
    """Per-class sample/token counts and the overall row."""
    rows: dict[str, TokenRow] = {}
    for label, tokens in manifest_documents(manifest, attribute, tokenizer):
        row = rows.setdefault(label, TokenRow(label, 0, 0))
        row.samples += 1
        row.tokens += len(tokens)
    per_class = [rows[k] for k in sorted(rows)]
    overall = TokenRow("Total", sum(r.samples for r in per_class), sum(r.tokens for r in per_class))
    return per_class, overall


def render_token_table(per_class: Sequence[TokenRow], overall: TokenRow) -> str:
    lines = ["class\tsamples\ttokens\tavg_tokens"]
    for r in [*per_class, overall]:
        lines.append(f"{r.label}\t{r.samples}\t{r.tokens}\t{r.average:.2f}")
    return "\n".join(lines) + "\n"
