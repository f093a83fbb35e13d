"""Inner training loop: combined loss, reversed encoder update, head update.

One step
--------
    live = state.for_grad()                  fresh leaves over the same arrays
    logits = forward_all(graph, …)           reversal nodes on adversarial paths
    objective = L_task + sum_i L_adv_i       (gamma lives in the graph)
    graph.backward(objective)
    grad_head_i += lambda * head_i           L2 decay on adversarial heads only
    theta <- theta - alpha * grad            SGD on every parameter

With ``grad_reverse(gamma_i)`` in front of each adversarial pooling and
``scale_grad(gamma_i)`` on its head parameters, the encoder receives
``dL_task - sum_i gamma_i dL_adv_i`` and each adversarial head receives
``gamma_i dL_adv_i``.  The reported ``combined`` value is
``L_task + sum_i gamma_i L_adv_i``.

With ``adversary_decay = 0`` the attribute component of the encoder output
oscillates in sign instead of shrinking.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from src.core.autograd import Graph, Tensor
from src.core.constants import ADVERSARY_DECAY, GAMMA_INIT, GAMMA_MAX
from src.core.errors import CoefficientError, ConfigError, DataError, DivergenceError
from src.core.model import ModelState, forward_all
from src.core.roles import Attribute, RoleMap, adversarial_attributes, validate_roles
from src.utils.atomic import write_text_atomic
from src.utils.log import LogFn, null_log

if TYPE_CHECKING:
    from src.corpus.manifest import Sample

Batch = Sequence["Sample"]
StepFn = Callable[[Batch, ModelState, int], "tuple[ModelState, LossBundle]"]


@dataclass
class TaskConfig:
    roles:           RoleMap
    learning_rate:   float = 0.05
    gamma_init:      dict[Attribute, float] | float = GAMMA_INIT
    gamma_max:       float = GAMMA_MAX
    adversary_decay: float = ADVERSARY_DECAY
    epochs:          int = 20
    batch_size:      int = 32
    seed:            int = 0

    @property
    def primary(self) -> Attribute:
        return validate_roles(self.roles)

    @property
    def adversarial(self) -> list[Attribute]:
        return adversarial_attributes(self.roles)

    def gamma_for(self, attribute: Attribute) -> float:
        if isinstance(self.gamma_init, dict):
            return float(self.gamma_init.get(attribute, GAMMA_INIT))
        return float(self.gamma_init)

    def validate(self) -> None:
        validate_roles(self.roles)
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not self.gamma_max > 0:
            raise ConfigError(f"gamma_max must be positive, got {self.gamma_max}")
        if not self.adversary_decay >= 0:
            raise ConfigError(f"adversary_decay must be >= 0, got {self.adversary_decay}")
        for attr in self.adversarial:
            g = self.gamma_for(attr)
            if not 0.0 <= g <= self.gamma_max:
                raise CoefficientError(f"gamma_init[{attr.value}] = {g} outside [0, {self.gamma_max}]")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class LossBundle:
    task_loss:  float
    adv_losses: list[tuple[Attribute, float]] = field(default_factory=list)
    combined:   float = 0.0

    @classmethod
    def assemble(cls, task_loss: float, adv: list[tuple[Attribute, float]],
                 gamma: dict[Attribute, float]) -> "LossBundle":
        combined = task_loss
        for attr, value in adv:
            combined += gamma[attr] * value
        return cls(task_loss, adv, combined)


# ---------------------------------------------------------------------------
# Batch helpers
# ---------------------------------------------------------------------------

def batch_frames(batch: Batch) -> list[np.ndarray]:
    if not batch:
        raise DataError("empty batch")
    frames = []
    for s in batch:
        if s.frames is None:
            raise DataError(f"sample {s.id!r} has no frames loaded", sample_id=s.id)
        frames.append(s.frames)
    return frames


def batch_labels(batch: Batch, attribute: Attribute) -> list[int]:
    labels = []
    for s in batch:
        idx = s.label_index(attribute)
        if idx is None:
            raise DataError(f"sample {s.id!r} has no {attribute.value} label", sample_id=s.id)
        labels.append(idx)
    return labels


def _build_objective(graph: Graph, batch: Batch, state: ModelState,
                     roles: RoleMap) -> tuple[Tensor, Tensor, list[tuple[Attribute, Tensor]]]:
    primary = validate_roles(roles)
    adv_attrs = adversarial_attributes(roles)
    labels = {a: batch_labels(batch, a) for a in [primary, *adv_attrs]}
    logits = forward_all(graph, batch_frames(batch), state, roles)

    task = graph.log_softmax_nll(logits[primary], labels[primary])
    objective = task
    adv: list[tuple[Attribute, Tensor]] = []
    for attr in adv_attrs:
        loss = graph.log_softmax_nll(logits[attr], labels[attr])
        adv.append((attr, loss))
        objective = graph.add(objective, loss)
    return objective, task, adv


# ---------------------------------------------------------------------------
# Losses and gradients
# ---------------------------------------------------------------------------

def compute_losses(batch: Batch, state: ModelState, config: TaskConfig) -> LossBundle:
    """Forward pass only."""
    _, task, adv = _build_objective(Graph(), batch, state, config.roles)
    return LossBundle.assemble(task.item(), [(a, l.item()) for a, l in adv], state.gamma)


def compute_gradients(batch: Batch, state: ModelState,
                      config: TaskConfig) -> tuple[LossBundle, list[np.ndarray]]:
    """Losses plus gradients of every parameter, in ``state.parameters()`` order."""
    live = state.for_grad()
    graph = Graph()
    objective, task, adv = _build_objective(graph, batch, live, config.roles)
    graph.backward(objective)
    bundle = LossBundle.assemble(task.item(), [(a, l.item()) for a, l in adv], state.gamma)
    return bundle, live.gradients()


def reversal_free_gradients(batch: Batch, state: ModelState, config: TaskConfig,
                            sign: float = -1.0) -> tuple[float, list[np.ndarray]]:
    """Gradient of ``L_task + sign * sum_i gamma_i L_adv_i`` without reversal nodes.

    ``sign=-1`` is the objective the reversed update minimises; ``sign=+1``
    is the plain weighted sum.
    """
    live = state.for_grad()
    graph = Graph()
    primary = validate_roles(config.roles)
    logits = forward_all(graph, batch_frames(batch), live, config.roles, reversal=False)
    total = graph.log_softmax_nll(logits[primary], batch_labels(batch, primary))
    for attr in adversarial_attributes(config.roles):
        loss = graph.log_softmax_nll(logits[attr], batch_labels(batch, attr))
        total = graph.add(total, graph.scale(loss, sign * state.gamma[attr]))
    graph.backward(total)
    return total.item(), live.gradients()


def with_adversary_decay(state: ModelState, grads: Sequence[np.ndarray],
                         config: TaskConfig) -> list[np.ndarray]:
    """Add ``adversary_decay * param`` to the gradient of every adversarial head parameter."""
    out = list(grads)
    if config.adversary_decay == 0.0:
        return out
    heads = {f"head.{a.value}." for a in config.adversarial}
    for i, (name, param) in enumerate(state.parameters()):
        if name[:name.rindex(".") + 1] in heads:
            out[i] = out[i] + config.adversary_decay * param.data
    return out


def sgd_update(state: ModelState, grads: Sequence[np.ndarray], learning_rate: float) -> ModelState:
    return state.with_arrays([p - learning_rate * g for p, g in zip(state.arrays(), grads)])


def _check_finite(bundle: LossBundle, grads: Sequence[np.ndarray], step: int) -> None:
    values = [bundle.task_loss, bundle.combined, *(v for _, v in bundle.adv_losses)]
    if not all(math.isfinite(v) for v in values):
        raise DivergenceError(f"non-finite loss {bundle}", step=step)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise DivergenceError("non-finite gradient", step=step)


def train_step(batch: Batch, state: ModelState, config: TaskConfig,
               step: int | None = None) -> tuple[ModelState, LossBundle]:
    """One SGD step on the combined objective."""
    step = state.step if step is None else step
    bundle, grads = compute_gradients(batch, state, config)
    _check_finite(bundle, grads, step)
    new_state = sgd_update(state, with_adversary_decay(state, grads, config), config.learning_rate)
    return replace(new_state, step=state.step + 1), bundle


# ---------------------------------------------------------------------------
# Epochs
# ---------------------------------------------------------------------------

@dataclass
class TraceRow:
    epoch:      int
    step:       int
    task_loss:  float
    adv_losses: dict[Attribute, float]
    gamma:      dict[Attribute, float]


@dataclass
class EpochSummary:
    epoch:           int
    mean_task_loss:  float
    mean_adv_losses: dict[Attribute, float]
    rows:            list[TraceRow]


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Deterministic shuffle for (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def make_batches(samples: Batch, order: np.ndarray, batch_size: int) -> list[list["Sample"]]:
    return [[samples[i] for i in order[k:k + batch_size]] for k in range(0, len(order), batch_size)]


def train_epoch(
    samples: Batch,
    state:   ModelState,
    config:  TaskConfig,
    epoch:   int | None = None,
    step_fn: StepFn | None = None,
    log:     LogFn | None = None,
    on_step: Callable[[int], None] | None = None,
) -> tuple[ModelState, EpochSummary]:
    """Shuffle, then run ``step_fn`` (default train_step) over every batch."""
    _log = log or null_log
    if not samples:
        raise DataError("cannot train on an empty split")
    epoch = state.epoch if epoch is None else epoch
    step_fn = step_fn or (lambda b, s, i: train_step(b, s, config, step=i))

    rows: list[TraceRow] = []
    for batch in make_batches(samples, epoch_order(len(samples), config.seed, epoch), config.batch_size):
        step_index = state.step
        state, bundle = step_fn(batch, state, step_index)
        rows.append(TraceRow(epoch, step_index, bundle.task_loss,
                             dict(bundle.adv_losses), dict(state.gamma)))
        if on_step:
            on_step(step_index)

    mean_task = float(np.mean([r.task_loss for r in rows]))
    mean_adv = {a: float(np.mean([r.adv_losses[a] for r in rows])) for a in config.adversarial}
    adv_txt = " ".join(f"{a.value}={v:.4f}" for a, v in mean_adv.items())
    gamma_txt = " ".join(f"{a.value}={v:.4f}" for a, v in state.gamma.items())
    _log("INFO", f"epoch {epoch}: task={mean_task:.4f} {adv_txt} gamma[{gamma_txt}]".rstrip())
    return replace(state, epoch=epoch + 1), EpochSummary(epoch, mean_task, mean_adv, rows)


def train(
    samples: Batch,
    state:   ModelState,
    config:  TaskConfig,
    step_fn: StepFn | None = None,
    log:     LogFn | None = None,
    on_step: Callable[[int], None] | None = None,
) -> tuple[ModelState, list[TraceRow]]:
    """Run epochs ``state.epoch .. config.epochs - 1``."""
    rows: list[TraceRow] = []
    while state.epoch < config.epochs:
        state, summary = train_epoch(samples, state, config, step_fn=step_fn, log=log, on_step=on_step)
        rows.extend(summary.rows)
    return state, rows


# ---------------------------------------------------------------------------
# Loss trace CSV
# ---------------------------------------------------------------------------

def trace_header(adversarial: Sequence[Attribute]) -> list[str]:
    return (["epoch", "step", "task_loss"]
            + [f"adv_loss_{a.value}" for a in adversarial]
            + [f"gamma_{a.value}" for a in adversarial])


def dumps_trace(rows: Sequence[TraceRow], adversarial: Sequence[Attribute]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(adversarial))
    for r in rows:
        writer.writerow([r.epoch, r.step, repr(r.task_loss)]
                        + [repr(r.adv_losses[a]) for a in adversarial]
                        + [repr(r.gamma[a]) for a in adversarial])
    return buf.getvalue()


def write_trace_csv(rows: Sequence[TraceRow], adversarial: Sequence[Attribute], path: Path) -> None:
    write_text_atomic(Path(path), dumps_trace(rows, adversarial))
