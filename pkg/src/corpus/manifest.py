"""Samples, corpus manifests and their JSONL form.

One sample per line, keys exactly::

    id, speaker_id, dialect, gender, age, duration_seconds,
    split (optional), transcript (optional), features_path (optional)

``features_path`` is resolved relative to the manifest's directory.
Labels may be null for unlabeled samples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from src.core.constants import SPLIT_NAMES
from src.core.errors import ArtifactIOError, IntegrityError, ManifestParseError
from src.core.roles import ATTRIBUTES, Attribute
from src.corpus.features import read_features, write_features
from src.utils.atomic import write_text_atomic

_REQUIRED = ("id", "speaker_id", "dialect", "gender", "age", "duration_seconds")
_OPTIONAL = ("split", "transcript", "features_path")
_FIELDS   = _REQUIRED + _OPTIONAL


@dataclass
class Sample:
    id:               str
    speaker_id:       str
    dialect:          str | None
    gender:           str | None
    age:              str | None
    duration_seconds: float
    transcript:       str | None = None
    features_path:    str | None = None
    frames:           np.ndarray | None = field(default=None, compare=False, repr=False)

    def label(self, attribute: Attribute) -> str | None:
        return getattr(self, attribute.value)

    def label_index(self, attribute: Attribute) -> int | None:
        value = self.label(attribute)
        return None if value is None else attribute.index_of(value)


@dataclass
class CorpusManifest:
    samples:          list[Sample] = field(default_factory=list)
    split_assignment: dict[str, str] | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def validate(self) -> None:
        """Unique ids; when splits are assigned, one split per speaker."""
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise IntegrityError(f"duplicate sample id {s.id!r}", sample_id=s.id)
            seen.add(s.id)
        if self.split_assignment is None:
            return
        speaker_split: dict[str, str] = {}
        for s in self.samples:
            split = self.split_assignment.get(s.id)
            if split is None:
                raise IntegrityError(f"sample {s.id!r} has no split", sample_id=s.id)
            if split not in SPLIT_NAMES:
                raise IntegrityError(f"sample {s.id!r}: unknown split {split!r}", sample_id=s.id)
            prev = speaker_split.setdefault(s.speaker_id, split)
            if prev != split:
                raise IntegrityError(
                    f"speaker {s.speaker_id!r} appears in both {prev!r} and {split!r}", sample_id=s.id)

    def speakers(self) -> dict[str, list[Sample]]:
        """Samples grouped by speaker, in order of first appearance."""
        groups: dict[str, list[Sample]] = {}
        for s in self.samples:
            groups.setdefault(s.speaker_id, []).append(s)
        return groups

    def split(self, name: str) -> list[Sample]:
        if self.split_assignment is None:
            raise IntegrityError("manifest has no split assignment")
        return [s for s in self.samples if self.split_assignment.get(s.id) == name]

    def with_splits(self, assignment: dict[str, str]) -> "CorpusManifest":
        out = replace(self, samples=list(self.samples), split_assignment=dict(assignment))
        out.validate()
        return out


# ---------------------------------------------------------------------------
# JSONL
# ---------------------------------------------------------------------------

def sample_to_record(sample: Sample, split: str | None = None) -> dict:
    record = {
        "id":               sample.id,
        "speaker_id":       sample.speaker_id,
        "dialect":          sample.dialect,
        "gender":           sample.gender,
        "age":              sample.age,
        "duration_seconds": sample.duration_seconds,
    }
    if split is not None:
        record["split"] = split
    if sample.transcript is not None:
        record["transcript"] = sample.transcript
    if sample.features_path is not None:
        record["features_path"] = sample.features_path
    return record


def dumps_manifest(manifest: CorpusManifest) -> str:
    lines = []
    for s in manifest.samples:
        split = manifest.split_assignment.get(s.id) if manifest.split_assignment else None
        lines.append(json.dumps(sample_to_record(s, split), ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def write_manifest(manifest: CorpusManifest, path: Path) -> None:
    manifest.validate()
    write_text_atomic(Path(path), dumps_manifest(manifest))


def _parse_record(line_num: int, raw: str) -> tuple[Sample, str | None]:
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(line_num, f"invalid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise ManifestParseError(line_num, "record is not an object")

    unknown = sorted(set(rec) - set(_FIELDS))
    if unknown:
        raise ManifestParseError(line_num, f"unknown field(s) {unknown}")
    missing = [k for k in _REQUIRED if k not in rec]
    if missing:
        raise ManifestParseError(line_num, f"missing field(s) {missing}")

    for key in ("id", "speaker_id"):
        if not isinstance(rec[key], str) or not rec[key]:
            raise ManifestParseError(line_num, f"{key} must be a non-empty string")
    duration = rec["duration_seconds"]
    if isinstance(duration, bool) or not isinstance(duration, (int, float)) or not duration > 0:
        raise ManifestParseError(line_num, f"duration_seconds must be positive, got {duration!r}")
    for attr in ATTRIBUTES:
        value = rec[attr.value]
        if value is not None and value not in attr.classes:
            raise ManifestParseError(line_num, f"{attr.value} {value!r} not in {attr.classes}")
    split = rec.get("split")
    if split is not None and split not in SPLIT_NAMES:
        raise ManifestParseError(line_num, f"split {split!r} not in {SPLIT_NAMES}")
    for key in ("transcript", "features_path"):
        if rec.get(key) is not None and not isinstance(rec[key], str):
            raise ManifestParseError(line_num, f"{key} must be a string")

    sample = Sample(
        id=rec["id"], speaker_id=rec["speaker_id"],
        dialect=rec["dialect"], gender=rec["gender"], age=rec["age"],
        duration_seconds=float(duration),
        transcript=rec.get("transcript"), features_path=rec.get("features_path"),
    )
    return sample, split


def parse_manifest(lines: Iterable[str]) -> CorpusManifest:
    samples: list[Sample] = []
    splits: dict[str, str] = {}
    ids: set[str] = set()
    for line_num, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        sample, split = _parse_record(line_num, raw)
        if sample.id in ids:
            raise IntegrityError(f"duplicate sample id {sample.id!r} (line {line_num})", sample_id=sample.id)
        ids.add(sample.id)
        samples.append(sample)
        if split is not None:
            splits[sample.id] = split

    if splits and len(splits) != len(samples):
        raise IntegrityError(f"split given for {len(splits)} of {len(samples)} samples")
    manifest = CorpusManifest(samples, splits or None)
    manifest.validate()
    return manifest


def read_manifest(path: Path, load_features: bool = True) -> CorpusManifest:
    """Parse a JSONL manifest; optionally load every sample's frames."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactIOError(path, f"cannot read manifest: {exc}") from exc
    manifest = parse_manifest(text.splitlines())
    if load_features:
        load_frames(manifest, path.parent)
    return manifest


def write_corpus(manifest: CorpusManifest, manifest_path: Path, features_dir: str = "features") -> None:
    """Write every in-memory frame array as an MRVF1 file, then the manifest.

    ``features_path`` entries are set relative to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    for s in manifest.samples:
        if s.frames is None:
            continue
        s.features_path = f"{features_dir}/{s.id}.mrvf"
        write_features(root / s.features_path, s.frames)
    write_manifest(manifest, manifest_path)


def load_frames(manifest: CorpusManifest, base_dir: Path) -> None:
    for s in manifest.samples:
        if s.features_path is not None and s.frames is None:
            s.frames = read_features(Path(base_dir) / s.features_path)
