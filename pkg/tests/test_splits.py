"""Tests for src.corpus.splits: speaker-disjoint assignment."""
import pytest

from src.core.errors import ConfigError, InfeasibleSplitError
from src.corpus.manifest import CorpusManifest, Sample
from src.corpus.splits import speaker_disjoint_split, split_proportions, validate_ratios
from src.corpus.synth import SynthConfig, generate


def corpus(sizes, dialects=None):
    samples = []
    for spk, n in enumerate(sizes):
        dialect = dialects[spk] if dialects else ("moldavian", "standard_romanian")[spk % 2]
        samples += [Sample(f"p{spk}_{k}", f"p{spk}", dialect, "male", "40-50", 1.0) for k in range(n)]
    return CorpusManifest(samples)


def speaker_sets(manifest, assignment):
    sets = {"train": set(), "val": set(), "test": set()}
    for s in manifest.samples:
        sets[assignment[s.id]].add(s.speaker_id)
    return sets


class TestSpeakerDisjointSplit:
    def test_three_speakers_one_each(self):
        manifest = corpus([4, 4, 4])
        assignment = speaker_disjoint_split(manifest, (1 / 3, 1 / 3, 1 / 3), seed=0)
        assert sorted(len(v) for v in speaker_sets(manifest, assignment).values()) == [1, 1, 1]

    def test_never_shares_speakers(self, rng):
        for seed in range(25):
            sizes = [int(n) for n in rng.integers(1, 30, size=int(rng.integers(3, 40)))]
            manifest = corpus(sizes)
            assignment = speaker_disjoint_split(manifest, (0.7, 0.15, 0.15), seed=seed)
            assert set(assignment) == {s.id for s in manifest.samples}
            sets = speaker_sets(manifest, assignment)
            assert not sets["train"] & sets["val"]
            assert not sets["train"] & sets["test"]
            assert not sets["val"] & sets["test"]
            assert all(sets.values())
            manifest.with_splits(assignment)

    def test_proportions_on_hundred_equal_speakers(self):
        manifest = generate(SynthConfig(num_speakers=100, samples_per_speaker=5, frames_min=2, frames_max=2))
        assignment = speaker_disjoint_split(manifest, (0.88, 0.06, 0.06), seed=1)
        props = split_proportions(manifest, assignment)
        for name, target in zip(("train", "val", "test"), (0.88, 0.06, 0.06)):
            assert abs(props[name] - target) <= 0.02

        overall = sum(s.dialect == "moldavian" for s in manifest.samples) / len(manifest)
        for name in ("train", "val", "test"):
            part = [s for s in manifest.samples if assignment[s.id] == name]
            share = sum(s.dialect == "moldavian" for s in part) / len(part)
            assert abs(share - overall) <= 0.05

    def test_rare_dialect_does_not_overfill_train(self):
        dialects = ["moldavian"] * 5 + ["standard_romanian"] * 55
        manifest = corpus([4] * 60, dialects)
        for seed in range(10):
            props = split_proportions(manifest, speaker_disjoint_split(manifest, (0.88, 0.06, 0.06), seed=seed))
            for name, target in zip(("train", "val", "test"), (0.88, 0.06, 0.06)):
                assert abs(props[name] - target) <= 0.02
            assert props["train"] <= 53 / 60

    def test_overshoot_below_one_speaker(self, rng):
        for seed in range(10):
            manifest = corpus([6] * int(rng.integers(20, 60)))
            props = split_proportions(manifest, speaker_disjoint_split(manifest, (0.8, 0.1, 0.1), seed=seed))
            speaker_share = 6 / len(manifest)
            for name, target in zip(("train", "val", "test"), (0.8, 0.1, 0.1)):
                assert props[name] - target < speaker_share

    def test_seeded(self):
        manifest = corpus([3] * 20)
        assert speaker_disjoint_split(manifest, seed=4) == speaker_disjoint_split(manifest, seed=4)

    def test_fewer_than_three_speakers(self):
        with pytest.raises(InfeasibleSplitError):
            speaker_disjoint_split(corpus([10, 10]))

    def test_logs_summary(self):
        lines = []
        speaker_disjoint_split(corpus([2] * 10), log=lambda lvl, msg: lines.append(msg))
        assert lines and "train=" in lines[0]


class TestRatios:
    @pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.9, 0.1, 0.0), (0.5, 0.3, 0.3), (-0.1, 0.6, 0.5)])
    def test_invalid(self, ratios):
        with pytest.raises(ConfigError):
            validate_ratios(ratios)

    def test_valid(self):
        assert validate_ratios([0.8, 0.1, 0.1]) == (0.8, 0.1, 0.1)
