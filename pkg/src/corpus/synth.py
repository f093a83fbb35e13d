"""Seeded synthetic corpus with controllable attribute leakage.

Every speaker draws a fixed (dialect, gender, age).  A frame of one of
their samples is

    x_t = sum_attr leak_attr * W_attr[label_attr]
          + speaker_leak * offset_speaker
          + noise_std * N(0, I)

with ``W_attr`` a fixed seeded [C x D_in] projection per attribute.  All
random draws happen in a fixed order that does not depend on the leak
values, so changing a leak strength changes only the signal, never the
noise realisation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from src.core.constants import (
    AGE_PRIOR, DEFAULT_INPUT_DIM, FRAME_RATE, GENDER_PRIOR, MAX_DURATION_S, MIN_DURATION_S,
)
from src.core.errors import ConfigError
from src.core.roles import ATTRIBUTES, Attribute
from src.corpus.manifest import CorpusManifest, Sample
from src.utils.log import LogFn, null_log

# Transcript vocabulary: common words plus a few per-dialect favourites
SHARED_WORDS = ("și", "de", "la", "în", "nu", "că", "pe", "cu", "este", "să",
                "un", "o", "ce", "mai", "lege", "proiect", "vot", "comisia")
DIALECT_WORDS = {
    "moldavian":         ("amu", "păi", "iaca", "mata", "ghini"),
    "standard_romanian": ("acum", "deci", "uite", "foarte", "bine"),
}


@dataclass
class SynthConfig:
    num_speakers:        int = 40
    samples_per_speaker: int = 25
    frames_min:          int = 20
    frames_max:          int = 40
    input_dim:           int = DEFAULT_INPUT_DIM
    leak:                dict[Attribute, float] = field(default_factory=lambda: {
        Attribute.DIALECT: 1.0, Attribute.GENDER: 1.0, Attribute.AGE: 0.0})
    speaker_leak:        float = 0.0
    noise_std:           float = 1.0
    seed:                int = 0
    mimic_demographics:  bool = False
    transcripts:         bool = False

    def leak_for(self, attribute: Attribute) -> float:
        return float(self.leak.get(attribute, 0.0))

    def validate(self) -> None:
        if self.num_speakers < 1:
            raise ConfigError(f"num_speakers must be >= 1, got {self.num_speakers}")
        if self.samples_per_speaker < 1:
            raise ConfigError(f"samples_per_speaker must be >= 1, got {self.samples_per_speaker}")
        if self.frames_min < 1 or self.frames_max < self.frames_min:
            raise ConfigError(f"frames range [{self.frames_min}, {self.frames_max}] is invalid")
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        for attr in ATTRIBUTES:
            if not self.leak_for(attr) >= 0:
                raise ConfigError(f"leak_{attr.value} must be >= 0, got {self.leak_for(attr)}")
        if not self.speaker_leak >= 0:
            raise ConfigError(f"speaker_leak must be >= 0, got {self.speaker_leak}")
        if not self.noise_std >= 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.mimic_demographics:
            lo, hi = self.frames_min / FRAME_RATE, self.frames_max / FRAME_RATE
            if lo < MIN_DURATION_S or hi > MAX_DURATION_S:
                raise ConfigError(f"durations {lo}-{hi} s fall outside "
                                  f"[{MIN_DURATION_S}, {MAX_DURATION_S}] s")


# ---------------------------------------------------------------------------
# Speaker attributes
# ---------------------------------------------------------------------------

def _balanced_labels(n: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Cycle through every (dialect, gender, age) combination, then shuffle.

    Dialect varies fastest, then gender, so any even count is exactly
    dialect-balanced and any multiple of 4 is balanced on both.
    """
    combos = [(d, g, a) for a, g, d in itertools.product(
        *(range(attr.num_classes) for attr in reversed(ATTRIBUTES)))]
    labels = [combos[i % len(combos)] for i in range(n)]
    return [labels[i] for i in rng.permutation(n)]


def _prior_labels(n: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    dialect = [i % 2 for i in rng.permutation(n)]
    gender = rng.choice(len(GENDER_PRIOR), size=n, p=np.asarray(GENDER_PRIOR) / sum(GENDER_PRIOR))
    age = rng.choice(len(AGE_PRIOR), size=n, p=np.asarray(AGE_PRIOR) / sum(AGE_PRIOR))
    return [(d, int(g), int(a)) for d, g, a in zip(dialect, gender, age)]


def _transcript(rng: np.random.Generator, dialect: str, length: int) -> str:
    vocab = SHARED_WORDS + DIALECT_WORDS[dialect]
    return " ".join(vocab[i] for i in rng.integers(0, len(vocab), size=length))


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate(config: SynthConfig, log: LogFn | None = None) -> CorpusManifest:
    """Build a manifest whose samples carry their frames in memory."""
    _log = log or null_log
    config.validate()
    rng = np.random.default_rng(config.seed)
    d_in = config.input_dim

    projections = {a: rng.normal(0.0, 1.0, size=(a.num_classes, d_in)) for a in ATTRIBUTES}
    label_rows = (_prior_labels if config.mimic_demographics else _balanced_labels)(config.num_speakers, rng)
    offsets = rng.normal(0.0, 1.0, size=(config.num_speakers, d_in))

    samples: list[Sample] = []
    for spk, labels in enumerate(label_rows):
        speaker_id = f"spk{spk:04d}"
        names = {a: a.classes[idx] for a, idx in zip(ATTRIBUTES, labels)}
        mean = sum(config.leak_for(a) * projections[a][idx] for a, idx in zip(ATTRIBUTES, labels))
        mean = mean + config.speaker_leak * offsets[spk]
        for k in range(config.samples_per_speaker):
            t = int(rng.integers(config.frames_min, config.frames_max + 1))
            noise = rng.normal(0.0, 1.0, size=(t, d_in))
            frames = (mean + config.noise_std * noise).astype(np.float32).astype(np.float64)
            transcript = None
            if config.transcripts:
                transcript = _transcript(rng, names[Attribute.DIALECT], int(rng.integers(5, 16)))
            samples.append(Sample(
                id=f"{speaker_id}_{k:04d}", speaker_id=speaker_id,
                dialect=names[Attribute.DIALECT], gender=names[Attribute.GENDER], age=names[Attribute.AGE],
                duration_seconds=t / FRAME_RATE, transcript=transcript, frames=frames,
            ))

    _log("INFO", f"generated {len(samples)} samples from {config.num_speakers} speakers (seed {config.seed})")
    manifest = CorpusManifest(samples)
    manifest.validate()
    return manifest
