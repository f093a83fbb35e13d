"""Command-line entry point.

    dialect-adv synth   --out DIR
    dialect-adv split   --manifest IN --out OUT
    dialect-adv train   --manifest M --out DIR [--mode meta] [--resume CKPT]
    dialect-adv eval    --checkpoint C --manifest M --out DIR
    dialect-adv probe   --checkpoint C --manifest M --attribute gender
    dialect-adv analyze {qwk,tfidf,snr,srr,stats,probe} ...
    dialect-adv report  --reports A.json B.json
    dialect-adv grid    --manifest M --out DIR [--primaries dialect gender]

Exit codes: 0 success, 2 usage/config, 3 data, 4 divergence.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

from src.cli import commands
from src.core.config import load_run_config
from src.core.errors import DialectAdvError
from src.core.roles import ATTRIBUTES
from src.utils.log import configure_logging, make_log_fn

_COMMANDS = {
    "synth":   commands.run_synth,
    "split":   commands.run_split,
    "train":   commands.run_train,
    "eval":    commands.run_eval,
    "probe":   commands.run_probe,
    "analyze": commands.run_analyze,
    "report":  commands.run_report,
    "grid":    commands.run_grid,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="settings file (default: none, built-in defaults)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="output directory (file for split/analyze/report)")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"])


def _manifest(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", type=Path)


def _task(p: argparse.ArgumentParser, roles: bool = True) -> None:
    if roles:
        p.add_argument("--roles", help='e.g. "dialect:up, gender:down" or "↑ ↓ ✗"')
    p.add_argument("--mode", help="fixed | meta")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--gamma-init", help='e.g. 0.1 or "gender:0.5, age:0.1"')
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--adversary-decay", type=float, help="L2 decay on adversarial heads")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--meta-learning-rate", type=float)
    p.add_argument("--val-batch-size", type=int)
    p.add_argument("--meta-every", type=int)


def _probe_args(p: argparse.ArgumentParser) -> None:
    _manifest(p)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--attribute", choices=[a.value for a in ATTRIBUTES])
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--raw", action="store_true", help="probe mean-pooled input frames instead of a checkpoint")
    p.add_argument("--roles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialect-adv",
                                     description="Multi-target adversarial training and corpus tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _common(p)
    p.add_argument("--num-speakers", type=int)
    p.add_argument("--samples-per-speaker", type=int)
    p.add_argument("--noise-std", type=float)
    p.add_argument("--speaker-leak", type=float)
    for attr in ATTRIBUTES:
        p.add_argument(f"--leak-{attr.value}", type=float, dest=f"leak_{attr.value}")
    p.add_argument("--transcripts", action="store_true", default=None)

    p = sub.add_parser("split", help="assign speaker-disjoint train/val/test splits")
    _common(p)
    _manifest(p)
    p.add_argument("--ratios", help="train val test, e.g. 0.88 0.06 0.06")

    p = sub.add_parser("train", help="train a model")
    _common(p)
    _manifest(p)
    _task(p)
    p.add_argument("--resume", type=Path, help="continue from a checkpoint")
    p.add_argument("--name", help="model name recorded in the report")

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    _common(p)
    _manifest(p)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--attribute", choices=[a.value for a in ATTRIBUTES])
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--roles")
    p.add_argument("--name")

    p = sub.add_parser("probe", help="linear probe on frozen representations")
    _common(p)
    _probe_args(p)

    p = sub.add_parser("analyze", help="corpus analyses")
    analyses = p.add_subparsers(dest="report", required=True)
    a = analyses.add_parser("qwk")
    _common(a)
    a.add_argument("--ratings", type=Path, help="CSV: item_id,rating_a,rating_b")
    a.add_argument("--classes", type=int)
    a = analyses.add_parser("tfidf")
    _common(a)
    _manifest(a)
    a.add_argument("--top", type=int, default=10)
    a = analyses.add_parser("snr")
    _common(a)
    a.add_argument("--wave", type=Path)
    a.add_argument("--frame-len", type=int, default=400)
    a.add_argument("--hop", type=int, default=160)
    a = analyses.add_parser("srr")
    _common(a)
    a.add_argument("--direct", type=Path)
    a.add_argument("--reverberant", type=Path)
    a = analyses.add_parser("stats")
    _common(a)
    _manifest(a)
    a = analyses.add_parser("probe")
    _common(a)
    _probe_args(a)

    p = sub.add_parser("report", help="render result reports as a table")
    _common(p)
    p.add_argument("--reports", nargs="*", type=Path)

    p = sub.add_parser("grid", help="train every role row for the chosen primaries and tabulate")
    _common(p)
    _manifest(p)
    _task(p, roles=False)
    p.add_argument("--primaries", nargs="*", choices=[a.value for a in ATTRIBUTES],
                   help="primary attributes (default: the configured primary)")
    return parser


_OVERRIDES = (
    "seed", "roles", "mode", "learning_rate", "gamma_init", "gamma_max", "adversary_decay", "epochs",
    "batch_size", "meta_learning_rate", "val_batch_size", "meta_every", "num_speakers", "samples_per_speaker",
    "noise_std", "speaker_leak", "leak_dialect", "leak_gender", "leak_age", "transcripts",
    "ratios", "manifest", "checkpoint", "out", "log_level",
)


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    configure_logging("INFO")
    log = make_log_fn("cli")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
        config = load_run_config(args.config, **overrides)
        configure_logging(config.log_level, config.log_dir)
        _COMMANDS[args.command](args, config, log, out)
    except DialectAdvError as exc:
        log("ERROR", f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    return 0
