"""Run configuration: settings.ini sections plus command-line overrides.

Flags always win over the file.  ``RunConfig.validate`` checks everything
before a subcommand writes anything.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from src.core.constants import GAMMA_INIT
from src.core.errors import ConfigError
from src.core.meta import MetaConfig
from src.core.model import EncoderConfig
from src.core.roles import ATTRIBUTES, Attribute, parse_roles, tokenize
from src.core.settings_manager import SettingsManager
from src.core.training import TaskConfig
from src.corpus.splits import DEFAULT_RATIOS, validate_ratios
from src.corpus.synth import SynthConfig

MODES = ("fixed", "meta")
_MODE_ALIASES = {"fixed": "fixed", "fixed-gamma": "fixed", "fixed_gamma": "fixed", "meta": "meta"}


@dataclass
class RunConfig:
    encoder:       EncoderConfig = field(default_factory=EncoderConfig)
    task:          TaskConfig = field(default_factory=lambda: TaskConfig(parse_roles("↑ ✗ ✗")))
    meta:          MetaConfig = field(default_factory=MetaConfig)
    synth:         SynthConfig = field(default_factory=SynthConfig)
    split_ratios:  tuple[float, float, float] = DEFAULT_RATIOS
    mode:          str = "fixed"
    manifest:      Path | None = None
    checkpoint:    Path | None = None
    output_dir:    Path | None = None
    log_level:     str = "INFO"
    log_dir:       Path | None = None
    show_progress: bool = False
    role_sugar:    dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        self.encoder.validate()
        self.task.validate()
        self.meta.validate()
        self.synth.validate()
        validate_ratios(self.split_ratios)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.synth.input_dim != self.encoder.input_dim:
            raise ConfigError(f"[SYNTH] input_dim {self.synth.input_dim} differs from "
                              f"[ENCODER] input_dim {self.encoder.input_dim}")


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def normalise_mode(text: str) -> str:
    mode = _MODE_ALIASES.get(text.strip().lower())
    if mode is None:
        raise ConfigError(f"unknown mode {text!r}; expected one of {MODES}")
    return mode


def parse_gamma(text: str) -> float | dict[Attribute, float]:
    """``0.1`` or ``gender:0.5, age:0.2``."""
    tokens = tokenize(text)
    if not tokens:
        return GAMMA_INIT
    try:
        if len(tokens) == 1 and ":" not in tokens[0] and "=" not in tokens[0]:
            return float(tokens[0])
        out: dict[Attribute, float] = {}
        for tok in tokens:
            name, _, value = tok.replace("=", ":").partition(":")
            out[Attribute(name.strip().lower())] = float(value)
        return out
    except ValueError:
        raise ConfigError(f"cannot parse gamma {text!r}") from None


def parse_ratios(text: str) -> tuple[float, float, float]:
    try:
        values = [float(t) for t in tokenize(text)]
    except ValueError:
        raise ConfigError(f"cannot parse split ratios {text!r}") from None
    return validate_ratios(values)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def from_settings(settings: SettingsManager) -> RunConfig:
    sugar = settings.role_sugar
    defaults = RunConfig()
    enc = EncoderConfig(
        input_dim=settings.getint("ENCODER", "input_dim", defaults.encoder.input_dim),
        hidden_dim=settings.getint("ENCODER", "hidden_dim", defaults.encoder.hidden_dim),
        num_layers=settings.getint("ENCODER", "num_layers", defaults.encoder.num_layers),
    )
    t = defaults.task
    roles_text = settings.get("TASK", "roles")
    task = TaskConfig(
        roles=parse_roles(roles_text, sugar) if roles_text else t.roles,
        learning_rate=settings.getfloat("TASK", "learning_rate", t.learning_rate),
        gamma_init=parse_gamma(settings.get("TASK", "gamma_init")),
        gamma_max=settings.getfloat("TASK", "gamma_max", t.gamma_max),
        adversary_decay=settings.getfloat("TASK", "adversary_decay", t.adversary_decay),
        epochs=settings.getint("TASK", "epochs", t.epochs),
        batch_size=settings.getint("TASK", "batch_size", t.batch_size),
        seed=settings.getint("TASK", "seed", t.seed),
    )
    m = defaults.meta
    meta = MetaConfig(
        meta_learning_rate=settings.getfloat("META", "meta_learning_rate", m.meta_learning_rate),
        val_batch_size=settings.getint("META", "val_batch_size", m.val_batch_size),
        meta_every=settings.getint("META", "meta_every", m.meta_every),
    )
    s = defaults.synth
    synth = SynthConfig(
        num_speakers=settings.getint("SYNTH", "num_speakers", s.num_speakers),
        samples_per_speaker=settings.getint("SYNTH", "samples_per_speaker", s.samples_per_speaker),
        frames_min=settings.getint("SYNTH", "frames_min", s.frames_min),
        frames_max=settings.getint("SYNTH", "frames_max", s.frames_max),
        input_dim=settings.getint("SYNTH", "input_dim", enc.input_dim),
        leak={a: settings.getfloat("SYNTH", f"leak_{a.value}", s.leak_for(a)) for a in ATTRIBUTES},
        speaker_leak=settings.getfloat("SYNTH", "speaker_leak", s.speaker_leak),
        noise_std=settings.getfloat("SYNTH", "noise_std", s.noise_std),
        seed=settings.getint("SYNTH", "seed", s.seed),
        mimic_demographics=settings.getbool("SYNTH", "mimic_demographics", s.mimic_demographics),
        transcripts=settings.getbool("SYNTH", "transcripts", s.transcripts),
    )
    ratios_text = settings.get("SPLIT", "ratios")
    return RunConfig(
        encoder=enc, task=task, meta=meta, synth=synth,
        split_ratios=parse_ratios(ratios_text) if ratios_text else DEFAULT_RATIOS,
        mode=normalise_mode(settings.get("TASK", "mode", "fixed")),
        manifest=settings.getpath("PATHS", "manifest"),
        checkpoint=settings.getpath("PATHS", "checkpoint"),
        output_dir=settings.getpath("PATHS", "output_dir"),
        log_level=settings.log_level,
        log_dir=settings.log_dir,
        show_progress=settings.show_progress,
        role_sugar=sugar,
    )


def apply_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """Apply command-line values; ``None`` means "not given"."""
    o = {k: v for k, v in overrides.items() if v is not None}
    task, meta, synth = config.task, config.meta, config.synth

    if "seed" in o:
        task = replace(task, seed=o["seed"])
        synth = replace(synth, seed=o["seed"])
    if "roles" in o:
        task = replace(task, roles=parse_roles(o["roles"], config.role_sugar))
    if "gamma_init" in o:
        task = replace(task, gamma_init=parse_gamma(str(o["gamma_init"])))
    for key in ("learning_rate", "gamma_max", "adversary_decay", "epochs", "batch_size"):
        if key in o:
            task = replace(task, **{key: o[key]})
    for key in ("meta_learning_rate", "val_batch_size", "meta_every"):
        if key in o:
            meta = replace(meta, **{key: o[key]})
    for key in ("num_speakers", "samples_per_speaker", "noise_std", "speaker_leak"):
        if key in o:
            synth = replace(synth, **{key: o[key]})
    leak = dict(synth.leak)
    for attr in ATTRIBUTES:
        if f"leak_{attr.value}" in o:
            leak[attr] = o[f"leak_{attr.value}"]
    synth = replace(synth, leak=leak)
    if o.get("transcripts"):
        synth = replace(synth, transcripts=True)

    out = replace(config, task=task, meta=meta, synth=synth)
    if "mode" in o:
        out = replace(out, mode=normalise_mode(o["mode"]))
    if "ratios" in o:
        out = replace(out, split_ratios=parse_ratios(o["ratios"]))
    for key in ("manifest", "checkpoint"):
        if key in o:
            out = replace(out, **{key: Path(o[key])})
    if "out" in o:
        out = replace(out, output_dir=Path(o["out"]))
    if "log_level" in o:
        out = replace(out, log_level=o["log_level"])
    return out


def load_run_config(config_path: Path | None = None, **overrides: Any) -> RunConfig:
    settings = SettingsManager(config_path) if config_path is not None else SettingsManager.from_string("")
    config = apply_overrides(from_settings(settings), **overrides)
    config.validate()
    return config
