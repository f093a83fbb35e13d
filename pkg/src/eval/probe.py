"""Linear probes on frozen representations.

Features are centred and divided by their global RMS; a zero-initialised
softmax-linear head is trained with full-batch gradient descent on a
seeded, label-stratified 80 % part and scored on the remaining 20 %.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.core.autograd import Graph, Tensor
from src.core.constants import PROBE_EPOCHS, PROBE_HELD_OUT, PROBE_LR
from src.core.errors import DataError
from src.core.model import ModelState, embed
from src.core.roles import Attribute
from src.core.training import batch_frames, batch_labels


@dataclass
class ProbeResult:
    accuracy:  float
    train_n:   int
    held_n:    int


def stratified_holdout(labels: np.ndarray, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per class, a seeded ``fraction`` of indices goes to the held-out part."""
    rng = np.random.default_rng(seed)
    fit, held = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_held = int(round(fraction * idx.size))
        held.append(idx[:n_held])
        fit.append(idx[n_held:])
    return np.sort(np.concatenate(fit)), np.sort(np.concatenate(held))


def normalise(features: np.ndarray) -> np.ndarray:
    x = features - features.mean(axis=0, keepdims=True)
    rms = float(np.sqrt(np.mean(x * x)))
    return x / rms if rms > 0 else x


def fit_linear_head(x: np.ndarray, y: np.ndarray, num_classes: int,
                    epochs: int = PROBE_EPOCHS, learning_rate: float = PROBE_LR) -> tuple[np.ndarray, np.ndarray]:
    w = np.zeros((x.shape[1], num_classes))
    b = np.zeros(num_classes)
    inputs = Tensor(x)
    for _ in range(epochs):
        wt, bt = Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)
        graph = Graph()
        loss = graph.log_softmax_nll(graph.add_bias(graph.matmul(inputs, wt), bt), y)
        graph.backward(loss)
        w = w - learning_rate * wt.grad
        b = b - learning_rate * bt.grad
    return w, b


def probe_features(features: np.ndarray, labels: Sequence[int], num_classes: int, seed: int = 0,
                   epochs: int = PROBE_EPOCHS, learning_rate: float = PROBE_LR) -> ProbeResult:
    """Held-out accuracy of a linear probe on per-sample feature vectors."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DataError(f"probe: {x.shape} features for {y.size} labels")
    fit, held = stratified_holdout(y, PROBE_HELD_OUT, seed)
    if fit.size == 0 or held.size == 0:
        raise DataError(f"probe needs samples on both sides of the hold-out, got {fit.size}/{held.size}")

    x = normalise(x)
    w, b = fit_linear_head(x[fit], y[fit], num_classes, epochs, learning_rate)
    pred = np.argmax(x[held] @ w + b, axis=1)
    return ProbeResult(float(np.mean(pred == y[held])), int(fit.size), int(held.size))


def probe(state: ModelState, samples: Sequence, attribute: Attribute, seed: int = 0,
          epochs: int = PROBE_EPOCHS, learning_rate: float = PROBE_LR) -> ProbeResult:
    """Probe ``attribute`` from frozen mean-pooled encoder outputs."""
    if not samples:
        raise DataError("probe needs a non-empty split")
    labels = batch_labels(samples, attribute)
    features = embed(state, batch_frames(samples))
    return probe_features(features, labels, attribute.num_classes, seed, epochs, learning_rate)


def raw_mean_features(samples: Sequence) -> np.ndarray:
    """Per-sample mean of the input frames."""
    return np.stack([f.mean(axis=0) for f in batch_frames(samples)])
