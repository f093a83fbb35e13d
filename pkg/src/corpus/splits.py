"""Speaker-disjoint train/val/test assignment.

Whole speakers are packed greedily: speakers are visited in a seeded
shuffle, stable-sorted by descending sample count.  Size comes first: a
split is open for a speaker of n samples when its size deficit is at least
n / 2, so an open split overshoots its target by at most half a speaker.  Among
open splits the one with the largest deficit for the speaker's dialect wins
(ties: larger size deficit, then train < val < test).  When no split is open
the largest size deficit wins.  While there are exactly as many speakers
left as empty splits, only empty splits are eligible, so no split ends up
without speakers.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from src.core.constants import SPLIT_NAMES
from src.core.errors import ConfigError, InfeasibleSplitError
from src.corpus.manifest import CorpusManifest
from src.utils.log import LogFn, null_log

DEFAULT_RATIOS = (0.88, 0.06, 0.06)


def validate_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != len(SPLIT_NAMES):
        raise ConfigError(f"need {len(SPLIT_NAMES)} split ratios, got {len(ratios)}")
    if any(not r > 0 for r in ratios):
        raise ConfigError(f"split ratios must be positive, got {list(ratios)}")
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")
    return tuple(float(r) for r in ratios)   # type: ignore[return-value]


def speaker_disjoint_split(
    manifest: CorpusManifest,
    ratios:   Sequence[float] = DEFAULT_RATIOS,
    seed:     int = 0,
    log:      LogFn | None = None,
) -> dict[str, str]:
    """Return ``{sample_id: split}`` with every speaker in exactly one split."""
    _log = log or null_log
    ratios = validate_ratios(ratios)
    groups = manifest.speakers()
    if len(groups) < len(SPLIT_NAMES):
        raise InfeasibleSplitError(
            f"{len(groups)} speaker(s) cannot fill {len(SPLIT_NAMES)} speaker-disjoint splits")

    rng = np.random.default_rng(seed)
    speaker_ids = sorted(groups)
    shuffled = [speaker_ids[i] for i in rng.permutation(len(speaker_ids))]
    order = sorted(shuffled, key=lambda spk: -len(groups[spk]))

    dialect_of = {spk: groups[spk][0].dialect for spk in order}
    total = len(manifest.samples)
    dialect_total: dict[str | None, int] = {}
    for spk in order:
        dialect_total[dialect_of[spk]] = dialect_total.get(dialect_of[spk], 0) + len(groups[spk])

    size = [0] * len(SPLIT_NAMES)
    speakers_in = [0] * len(SPLIT_NAMES)
    dialect_size = [{d: 0 for d in dialect_total} for _ in SPLIT_NAMES]
    assignment: dict[str, str] = {}

    for k, spk in enumerate(order):
        d = dialect_of[spk]
        remaining = len(order) - k
        empty = [i for i in range(len(SPLIT_NAMES)) if speakers_in[i] == 0]
        candidates = empty if len(empty) >= remaining else range(len(SPLIT_NAMES))
        n = len(groups[spk])

        def key(i: int) -> tuple[bool, float, float, int]:
            size_deficit = ratios[i] * total - size[i]
            dialect_deficit = ratios[i] * dialect_total[d] - dialect_size[i][d]
            if size_deficit >= n / 2:
                return (True, dialect_deficit, size_deficit, -i)
            return (False, size_deficit, dialect_deficit, -i)

        chosen = max(candidates, key=key)
        size[chosen] += n
        speakers_in[chosen] += 1
        dialect_size[chosen][d] += n
        for s in groups[spk]:
            assignment[s.id] = SPLIT_NAMES[chosen]

    summary = ", ".join(f"{name}={size[i]} ({size[i] / total:.1%}, {speakers_in[i]} spk)"
                        for i, name in enumerate(SPLIT_NAMES))
    _log("INFO", f"split {total} samples: {summary}")
    return assignment


def split_proportions(manifest: CorpusManifest, assignment: dict[str, str]) -> dict[str, float]:
    """Fraction of samples per split."""
    n = len(manifest.samples)
    return {name: sum(1 for s in manifest.samples if assignment[s.id] == name) / n for name in SPLIT_NAMES}
