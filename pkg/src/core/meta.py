"""Outer loop: adapt the adversarial coefficients on validation data.

For one inner SGD step the lookahead encoder parameters are

    theta' = theta - alpha * (dL_task - sum_i gamma_i dL_adv_i)

so ``d theta' / d gamma_i = alpha * dL_adv_i`` (the inner gradients at theta
do not depend on gamma) and

    dL_meta / d gamma_i = alpha * < dL_adv_i(train, theta), dL_task(val, theta') >

taken over the encoder parameters.  The primary head's lookahead does not
depend on gamma and the adversarial heads do not enter L_meta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from src.core.autograd import Graph
from src.core.constants import META_LR
from src.core.errors import ConfigError, DataError, DivergenceError, StateError
from src.core.model import ModelState, forward_all
from src.core.roles import Attribute, Role
from src.core.training import (
    Batch, LossBundle, StepFn, TaskConfig,
    batch_frames, batch_labels, compute_gradients, sgd_update, train_step, with_adversary_decay,
)


@dataclass
class MetaConfig:
    meta_learning_rate: float = META_LR
    val_batch_size:     int = 32
    meta_every:         int = 1

    def validate(self) -> None:
        # eta = 0 is allowed: it reduces meta mode to fixed-gamma training
        if not self.meta_learning_rate >= 0:
            raise ConfigError(f"meta_learning_rate must be >= 0, got {self.meta_learning_rate}")
        if self.val_batch_size < 1:
            raise ConfigError(f"val_batch_size must be >= 1, got {self.val_batch_size}")
        if self.meta_every < 1:
            raise ConfigError(f"meta_every must be >= 1, got {self.meta_every}")


@dataclass
class LookaheadState:
    theta_prime:   ModelState
    adv_grads:     dict[Attribute, list[np.ndarray]] | None   # encoder-only, at theta
    learning_rate: float
    inner:         LossBundle


# ---------------------------------------------------------------------------
# Gradients on single objectives
# ---------------------------------------------------------------------------

def _plain_encoder_gradient(batch: Batch, state: ModelState,
                            attribute: Attribute) -> tuple[float, list[np.ndarray]]:
    """Encoder gradient of one head's plain cross-entropy (no reversal, no scaling)."""
    live = state.for_grad()
    graph = Graph()
    logits = forward_all(graph, batch_frames(batch), live, {attribute: Role.PRIMARY})
    loss = graph.log_softmax_nll(logits[attribute], batch_labels(batch, attribute))
    graph.backward(loss)
    return loss.item(), live.gradients()[:state.num_encoder_params]


def _flat_dot(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(x, y) for x, y in zip(a, b)))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def inner_step(train_batch: Batch, state: ModelState, config: TaskConfig) -> LookaheadState:
    """One-step lookahead theta' with the current gamma; ``state`` is not modified."""
    state.validate_gamma()
    bundle, grads = compute_gradients(train_batch, state, config)
    theta_prime = sgd_update(state, with_adversary_decay(state, grads, config), config.learning_rate)
    adv_grads = {a: _plain_encoder_gradient(train_batch, state, a)[1] for a in config.adversarial}
    return LookaheadState(theta_prime, adv_grads, config.learning_rate, bundle)


def meta_loss(val_batch: Batch, lookahead: LookaheadState, config: TaskConfig) -> float:
    """Primary-task cross-entropy at theta'."""
    if not val_batch:
        raise DataError("meta_loss needs a non-empty validation batch")
    primary = config.primary
    graph = Graph()
    logits = forward_all(graph, batch_frames(val_batch), lookahead.theta_prime, {primary: Role.PRIMARY})
    return graph.log_softmax_nll(logits[primary], batch_labels(val_batch, primary)).item()


def hypergradient(lookahead: LookaheadState, val_batch: Batch,
                  config: TaskConfig) -> tuple[dict[Attribute, float], float]:
    """Exact single-step dL_meta/dgamma per adversarial attribute, plus L_meta."""
    if lookahead.adv_grads is None:
        raise StateError("lookahead holds no inner adversarial gradients")
    missing = [a.value for a in config.adversarial if a not in lookahead.adv_grads]
    if missing:
        raise StateError(f"lookahead has no inner gradient for {missing}")
    if not val_batch:
        raise DataError("hypergradient needs a non-empty validation batch")

    loss, val_grad = _plain_encoder_gradient(val_batch, lookahead.theta_prime, config.primary)
    alpha = lookahead.learning_rate
    hyper = {a: alpha * _flat_dot(lookahead.adv_grads[a], val_grad) for a in config.adversarial}
    return hyper, loss


def meta_update(state: ModelState, hypergrad: dict[Attribute, float], config: MetaConfig,
                step: int | None = None) -> ModelState:
    """gamma_i <- clamp(gamma_i - eta * h_i, 0, gamma_max)."""
    bad = {a.value: h for a, h in hypergrad.items() if not math.isfinite(h)}
    if bad:
        raise DivergenceError(f"non-finite hypergradient {bad}", step=state.step if step is None else step)
    gamma = dict(state.gamma)
    for attr, h in hypergrad.items():
        if attr not in gamma:
            raise ConfigError(f"no adversarial coefficient for {attr.value}")
        gamma[attr] = min(max(gamma[attr] - config.meta_learning_rate * h, 0.0), state.gamma_max)
    return replace(state, gamma=gamma)


# ---------------------------------------------------------------------------
# Training integration
# ---------------------------------------------------------------------------

class ValidationCycle:
    """Validation batches in a fixed seeded order, served round-robin.

    Batch ``k`` depends only on ``k``, so resumed runs see the same batches.
    """

    def __init__(self, samples: Batch, batch_size: int, seed: int) -> None:
        if not samples:
            raise DataError("meta mode needs a non-empty validation split")
        order = np.random.default_rng([seed, 0x5EED]).permutation(len(samples))
        self._batches = [[samples[i] for i in order[k:k + batch_size]]
                         for k in range(0, len(order), batch_size)]

    def __len__(self) -> int:
        return len(self._batches)

    def batch(self, k: int) -> list:
        return self._batches[k % len(self._batches)]


def meta_train_step(train_batch: Batch, val_batch: Batch, state: ModelState,
                    task: TaskConfig, meta: MetaConfig,
                    step: int | None = None) -> tuple[ModelState, LossBundle]:
    """Lookahead, gamma update, then the real step with the new gamma."""
    step = state.step if step is None else step
    lookahead = inner_step(train_batch, state, task)
    hyper, _ = hypergradient(lookahead, val_batch, task)
    state = meta_update(state, hyper, meta, step=step)
    return train_step(train_batch, state, task, step=step)


def make_meta_step_fn(task: TaskConfig, meta: MetaConfig, val_samples: Batch) -> StepFn:
    """StepFn for ``train_epoch`` running a meta-update every ``meta_every`` steps."""
    cycle = ValidationCycle(val_samples, meta.val_batch_size, task.seed)

    def step_fn(batch: Batch, state: ModelState, step: int) -> tuple[ModelState, LossBundle]:
        if not task.adversarial or step % meta.meta_every != 0:
            return train_step(batch, state, task, step=step)
        return meta_train_step(batch, cycle.batch(step // meta.meta_every), state, task, meta, step=step)

    return step_fn
