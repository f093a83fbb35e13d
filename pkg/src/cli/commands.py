"""Subcommand implementations.

Each ``run_*`` takes the parsed arguments, a validated RunConfig and a
``LogFn``; it returns normally on success and raises a DialectAdvError
otherwise.  Everything is read and checked before the first file is
written.  Results meant for the operator go to ``out`` (stdout).
"""
from __future__ import annotations

import argparse
import csv
import io
import os
from dataclasses import replace
from pathlib import Path
from typing import Callable, TextIO

from src.core.checkpoint import load_checkpoint, save_checkpoint
from src.core.config import RunConfig
from src.core.errors import ConfigError, DataError, IntegrityError, UsageError
from src.core.meta import make_meta_step_fn
from src.core.model import ModelState, init_model_state, predict
from src.core.roles import Attribute, format_roles, parse_roles, role_grid, run_slug
from src.core.training import batch_frames, batch_labels, dumps_trace, train
from src.corpus.agreement import percent_agreement, qwk, read_rater_csv
from src.corpus.features import read_waveform
from src.corpus.manifest import CorpusManifest, read_manifest, write_corpus, write_manifest
from src.corpus.quality import snr_estimate, srr_components
from src.corpus.splits import speaker_disjoint_split
from src.corpus.stats import corpus_stats, render_stats_table
from src.corpus.synth import generate
from src.corpus.text_stats import (
    dumps_tfidf, manifest_documents, render_token_table, tfidf_top_terms, token_stats,
)
from src.eval.metrics import EvalReport, confusion_csv, evaluate, read_report, write_report
from src.eval.probe import probe, probe_features, raw_mean_features
from src.eval.report import render_results_table
from src.utils.atomic import write_text_atomic
from src.utils.log import LogFn
from src.utils.optional_deps import HAS_TQDM, tqdm

MANIFEST_NAME   = "manifest.jsonl"
CHECKPOINT_NAME = "checkpoint.mrvc"
TRACE_NAME      = "trace.csv"
REPORT_NAME     = "report.json"
CONFUSION_NAME  = "confusion.csv"
RESULTS_NAME    = "results.txt"


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def require(value, flag: str):
    if value is None:
        raise UsageError(flag)
    return value


def out_dir(config: RunConfig) -> Path:
    return require(config.output_dir, "--out")


def load_split_manifest(config: RunConfig) -> CorpusManifest:
    manifest = read_manifest(require(config.manifest, "--manifest"))
    if manifest.split_assignment is None:
        raise IntegrityError(f"{config.manifest}: manifest has no split assignment; run `split` first")
    return manifest


def split_samples(manifest: CorpusManifest, name: str) -> list:
    samples = manifest.split(name)
    if not samples:
        raise DataError(f"split {name!r} is empty")
    return samples


def check_compatible(state: ModelState, config: RunConfig) -> None:
    if state.encoder_config != config.encoder:
        raise ConfigError(f"checkpoint encoder {state.encoder_config} differs from config {config.encoder}")
    expected = set(config.task.adversarial)
    if set(state.gamma) != expected:
        raise ConfigError(f"checkpoint adversarial targets {sorted(a.value for a in state.gamma)} "
                          f"differ from role map {sorted(a.value for a in expected)}")


def evaluate_split(state: ModelState, samples: list, attribute: Attribute) -> EvalReport:
    predictions = predict(state, batch_frames(samples), attribute)
    return evaluate(predictions, batch_labels(samples, attribute), attribute.num_classes)


def progress(config: RunConfig, total: int) -> tuple[Callable[[int], None] | None, Callable[[], None]]:
    if not (config.show_progress and HAS_TQDM):
        return None, lambda: None
    bar = tqdm(total=total, unit="step", leave=False)
    return (lambda _step: bar.update(1)), bar.close


def write_csv_rows(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    write_text_atomic(path, buf.getvalue())


# ---------------------------------------------------------------------------
# synth / split
# ---------------------------------------------------------------------------

def run_synth(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    target = out_dir(config)
    manifest = generate(config.synth, log=log)
    write_corpus(manifest, target / MANIFEST_NAME)
    log("SUCCESS", f"wrote {len(manifest)} samples to {target / MANIFEST_NAME}")
    out.write(render_stats_table(corpus_stats(manifest)))


def run_split(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    source = require(config.manifest, "--manifest")
    target = require(args.out, "--out")
    manifest = read_manifest(source, load_features=False)
    assignment = speaker_disjoint_split(manifest, config.split_ratios, config.task.seed, log=log)
    split = manifest.with_splits(assignment)

    # keep feature files reachable from the new location
    for s in split.samples:
        if s.features_path is not None:
            absolute = Path(source).parent / s.features_path
            s.features_path = Path(os.path.relpath(absolute, Path(target).parent)).as_posix()
    write_manifest(split, Path(target))
    log("SUCCESS", f"wrote split manifest {target}")
    out.write(render_stats_table(corpus_stats(split)))


# ---------------------------------------------------------------------------
# train / eval / probe
# ---------------------------------------------------------------------------

def run_train(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    target = out_dir(config)
    manifest = load_split_manifest(config)
    task = config.task
    train_samples = split_samples(manifest, "train")
    test_samples = split_samples(manifest, "test")
    batch_labels(train_samples, task.primary)
    for attr in task.adversarial:
        batch_labels(train_samples, attr)

    if args.resume is not None:
        state = load_checkpoint(args.resume)
        check_compatible(state, config)
        log("INFO", f"resuming from {args.resume} at epoch {state.epoch}, step {state.step}")
    else:
        gamma = {a: task.gamma_for(a) for a in task.adversarial}
        state = init_model_state(config.encoder, task.roles, gamma, task.gamma_max, seed=task.seed)

    step_fn = None
    if config.mode == "meta":
        step_fn = make_meta_step_fn(task, config.meta, split_samples(manifest, "val"))
    log("INFO", f"training {format_roles(task.roles)} in {config.mode} mode "
                f"on {len(train_samples)} samples for {task.epochs} epochs")

    steps_per_epoch = -(-len(train_samples) // task.batch_size)
    on_step, close = progress(config, steps_per_epoch * max(0, task.epochs - state.epoch))
    try:
        state, rows = train(train_samples, state, task, step_fn=step_fn, log=log, on_step=on_step)
    finally:
        close()

    report = evaluate_split(state, test_samples, task.primary)
    save_checkpoint(state, target / CHECKPOINT_NAME)
    trace_path = target / TRACE_NAME
    trace = dumps_trace(rows, task.adversarial)
    if args.resume is not None and trace_path.exists():
        trace = trace_path.read_text(encoding="utf-8") + trace.split("\n", 1)[1]
    write_text_atomic(trace_path, trace)
    write_report(report, target / REPORT_NAME, model=args.name, roles=format_roles(task.roles),
                 attribute=task.primary.value, split="test")
    confusion_csv(report, task.primary.classes, target / CONFUSION_NAME)
    log("SUCCESS", f"test {task.primary.value} accuracy {report.accuracy:.4f}, macro F1 {report.f1:.4f}")
    out.write(f"{task.primary.value} accuracy {report.accuracy:.4f} f1 {report.f1:.4f}\n")


def _attribute(args: argparse.Namespace, config: RunConfig) -> Attribute:
    if getattr(args, "attribute", None):
        return Attribute(args.attribute)
    return config.task.primary


def run_eval(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    target = out_dir(config)
    state = load_checkpoint(require(config.checkpoint, "--checkpoint"))
    manifest = load_split_manifest(config)
    attribute = _attribute(args, config)
    report = evaluate_split(state, split_samples(manifest, args.split), attribute)
    write_report(report, target / REPORT_NAME, model=args.name, roles=format_roles(config.task.roles),
                 attribute=attribute.value, split=args.split)
    confusion_csv(report, attribute.classes, target / CONFUSION_NAME)
    out.write(f"{attribute.value} accuracy {report.accuracy:.4f} precision {report.precision:.4f} "
              f"recall {report.recall:.4f} f1 {report.f1:.4f}\n")


def run_probe(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    attribute = _attribute(args, config)
    if args.raw:
        manifest = read_manifest(require(config.manifest, "--manifest"))
        samples = manifest.split(args.split) if manifest.split_assignment else manifest.samples
        result = probe_features(raw_mean_features(samples), batch_labels(samples, attribute),
                                attribute.num_classes, seed=config.task.seed)
    else:
        state = load_checkpoint(require(config.checkpoint, "--checkpoint"))
        samples = split_samples(load_split_manifest(config), args.split)
        result = probe(state, samples, attribute, seed=config.task.seed)
    log("INFO", f"probe fitted on {result.train_n}, scored on {result.held_n} samples")
    out.write(f"probe {attribute.value} accuracy {result.accuracy:.4f}\n")


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def run_analyze(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    report = args.report
    if report == "qwk":
        table = read_rater_csv(require(args.ratings, "--ratings"), require(args.classes, "--classes"))
        kappa, agree = qwk(table), percent_agreement(table)
        out.write(f"{kappa:.4f}\n")
        log("INFO", f"{len(table.items)} items, percent agreement {agree:.4f}")
        if args.out:
            write_csv_rows(Path(args.out), ["qwk", "percent_agreement", "items"],
                           [[repr(kappa), repr(agree), len(table.items)]])
    elif report == "tfidf":
        manifest = read_manifest(require(config.manifest, "--manifest"), load_features=False)
        top = tfidf_top_terms(manifest_documents(manifest), args.top)
        text = dumps_tfidf(top)
        out.write(text)
        if args.out:
            write_text_atomic(Path(args.out), text)
    elif report == "snr":
        wave = read_waveform(require(args.wave, "--wave"))
        out.write(f"{snr_estimate(wave, args.frame_len, args.hop):.2f}\n")
    elif report == "srr":
        direct = read_waveform(require(args.direct, "--direct"))
        reverberant = read_waveform(require(args.reverberant, "--reverberant"))
        out.write(f"{srr_components(direct, reverberant):.2f}\n")
    elif report == "stats":
        manifest = read_manifest(require(config.manifest, "--manifest"), load_features=False)
        text = render_stats_table(corpus_stats(manifest))
        if all(s.transcript is not None for s in manifest.samples):
            text += "\n" + render_token_table(*token_stats(manifest))
        out.write(text)
        if args.out:
            write_text_atomic(Path(args.out), text)
    elif report == "probe":
        run_probe(args, config, log, out)
    else:
        raise UsageError("report", f"unknown analysis {report!r}")


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def run_report(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    if not args.reports:
        raise UsageError("--reports")
    rows = []
    for path in args.reports:
        report, extra = read_report(Path(path))
        name = extra.get("model") or Path(path).parent.name
        roles = parse_roles(extra["roles"]) if "roles" in extra else config.task.roles
        rows.append((name, roles, report))
    table = render_results_table(rows)
    out.write(table)
    if args.out:
        write_text_atomic(Path(args.out), table)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def run_grid(args: argparse.Namespace, config: RunConfig, log: LogFn, out: TextIO) -> None:
    """Train every role row of each chosen primary and render one results table.

    Each row trains into ``OUT/<slug>/`` exactly as ``train`` would; the
    table goes to ``OUT/results.txt`` and to ``out``.
    """
    target = out_dir(config)
    primaries = [Attribute(p) for p in args.primaries] if args.primaries else [config.task.primary]
    manifest = load_split_manifest(config)
    train_samples = split_samples(manifest, "train")
    split_samples(manifest, "test")
    if config.mode == "meta":
        split_samples(manifest, "val")
    for attr in Attribute:
        batch_labels(train_samples, attr)
    runs = []
    for primary in dict.fromkeys(primaries):
        for roles in role_grid(primary):
            run_config = replace(config, task=replace(config.task, roles=roles),
                                 output_dir=target / run_slug(roles))
            run_config.validate()
            runs.append(run_config)

    rows = []
    for k, run_config in enumerate(runs, 1):
        name = run_slug(run_config.task.roles)
        log("INFO", f"grid run {k}/{len(runs)}: {name}")
        run_train(argparse.Namespace(resume=None, name=name), run_config, log, io.StringIO())
        report, _ = read_report(run_config.output_dir / REPORT_NAME)
        rows.append((name, run_config.task.roles, report))

    table = render_results_table(rows)
    write_text_atomic(target / RESULTS_NAME, table)
    out.write(table)
