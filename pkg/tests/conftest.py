"""Shared test fixtures."""
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is on sys.path so `src.*` imports work
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.core.model import EncoderConfig, init_model_state          # noqa: E402
from src.core.roles import Attribute, parse_roles                    # noqa: E402
from src.corpus.manifest import Sample                               # noqa: E402
from src.corpus.synth import SynthConfig, generate                   # noqa: E402


def make_samples(rng: np.random.Generator, n: int, d_in: int, t_max: int = 5) -> list[Sample]:
    """Random frames with random labels for every attribute."""
    out = []
    for i in range(n):
        t = int(rng.integers(1, t_max + 1))
        out.append(Sample(
            id=f"s{i}", speaker_id=f"p{i}",
            dialect=Attribute.DIALECT.classes[int(rng.integers(2))],
            gender=Attribute.GENDER.classes[int(rng.integers(2))],
            age=Attribute.AGE.classes[int(rng.integers(5))],
            duration_seconds=t / 50,
            frames=rng.uniform(-2, 2, size=(t, d_in)),
        ))
    return out


def make_state(roles_text: str, seed: int = 0, d_in: int = 3, hidden: int = 4,
               layers: int = 2, gamma=0.3):
    roles = parse_roles(roles_text)
    return roles, init_model_state(EncoderConfig(d_in, hidden, layers), roles, gamma, seed=seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_corpus():
    """80 speakers x 5 samples, dialect and gender leaking."""
    return generate(SynthConfig(num_speakers=80, samples_per_speaker=5, frames_min=5, frames_max=10,
                                input_dim=8, noise_std=0.5, seed=7, transcripts=True))
