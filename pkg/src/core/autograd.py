"""Tape-style reverse-mode differentiation over 64-bit numpy arrays.

Usage
-----
    g = Graph()
    h = g.tanh(g.add_bias(g.matmul(x, w), b))
    loss = g.log_softmax_nll(h, labels)
    g.backward(loss)            # w.grad, b.grad now hold d loss / d param

A Graph is rebuilt for every forward pass.  Nodes are appended in execution
order; backward walks them once in reverse and the graph is then spent.
Leaf tensors (those not produced by a node) with ``requires_grad`` receive
their gradient in ``.grad``, accumulated additively.

Only bias-add broadcasts (a [C] vector over the rows of an [N x C] matrix).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from src.core.errors import (
    CoefficientError, DimensionError, EmptySequenceError,
    GraphReuseError, LabelError, RankError,
)

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    """Dense float64 array with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = "") -> None:
        arr = np.asarray(data, dtype=np.float64)
        if any(d < 1 for d in arr.shape):
            raise EmptySequenceError(f"tensor dimensions must be positive, got {arr.shape}")
        self.data          = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name          = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the data."""
        return self.data.ravel()

    def item(self) -> float:
        if self.data.size != 1:
            raise RankError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, name={self.name!r})"


@dataclass
class _Node:
    op:       str
    inputs:   tuple[Tensor, ...]
    output:   Tensor
    backward: BackwardFn


def _check_rank(x: Tensor, rank: int, op: str) -> None:
    if x.data.ndim != rank:
        raise DimensionError(f"{op}: expected rank {rank}, got shape {x.shape}")


class Graph:
    """Append-only record of operations for one forward pass."""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._produced: dict[int, Tensor] = {}
        self._spent = False

    def __len__(self) -> int:
        return len(self._nodes)

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------

    def _record(self, op: str, inputs: tuple[Tensor, ...], data: np.ndarray,
                backward: BackwardFn) -> Tensor:
        if self._spent:
            raise GraphReuseError("graph already consumed by backward(); build a new one")
        out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs), name=op)
        if out.requires_grad:
            self._nodes.append(_Node(op, inputs, out, backward))
            self._produced[id(out)] = out
        return out

    # ------------------------------------------------------------------
    # Linear algebra
    # ------------------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        _check_rank(a, 2, "matmul")
        _check_rank(b, 2, "matmul")
        if a.shape[1] != b.shape[0]:
            raise DimensionError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
        A, B = a.data, b.data
        return self._record("matmul", (a, b), A @ B, lambda g: (g @ B.T, A.T @ g))

    def add_bias(self, x: Tensor, bias: Tensor) -> Tensor:
        """[N x C] + [C], the bias repeated over rows."""
        _check_rank(x, 2, "add_bias")
        _check_rank(bias, 1, "add_bias")
        if x.shape[1] != bias.shape[0]:
            raise DimensionError(f"add_bias: width {x.shape[1]} vs bias {bias.shape}")
        return self._record("add_bias", (x, bias), x.data + bias.data,
                            lambda g: (g, g.sum(axis=0)))

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"add: shapes differ, {a.shape} vs {b.shape}")
        return self._record("add", (a, b), a.data + b.data, lambda g: (g, g))

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"mul: shapes differ, {a.shape} vs {b.shape}")
        A, B = a.data, b.data
        return self._record("mul", (a, b), A * B, lambda g: (g * B, g * A))

    def scale(self, x: Tensor, factor: float) -> Tensor:
        """Multiply by a constant."""
        c = float(factor)
        return self._record("scale", (x,), x.data * c, lambda g: (g * c,))

    def sum(self, x: Tensor) -> Tensor:
        shape = x.shape
        return self._record("sum", (x,), np.asarray(x.data.sum()),
                            lambda g: (np.full(shape, float(g)),))

    def reshape(self, x: Tensor, *shape: int) -> Tensor:
        old = x.shape
        try:
            data = x.data.reshape(shape)
        except ValueError as exc:
            raise DimensionError(f"reshape: cannot view {old} as {shape}") from exc
        return self._record("reshape", (x,), data, lambda g: (g.reshape(old),))

    # ------------------------------------------------------------------
    # Nonlinearities and pooling
    # ------------------------------------------------------------------

    def tanh(self, x: Tensor) -> Tensor:
        y = np.tanh(x.data)
        return self._record("tanh", (x,), y, lambda g: (g * (1.0 - y * y),))

    def mean_axis(self, x: Tensor) -> Tensor:
        """[T x D] -> [D], the average over time."""
        if x.data.ndim != 2 or x.shape[0] == 0:
            raise EmptySequenceError(f"mean_axis: need a [T x D] input with T >= 1, got {x.shape}")
        t, d = x.shape
        return self._record("mean_axis", (x,), x.data.sum(axis=0) / t,
                            lambda g: (np.broadcast_to(g / t, (t, d)).copy(),))

    def mean_segments(self, x: Tensor, lengths: Sequence[int]) -> Tensor:
        """Mean-pool consecutive row blocks of ``x``: [sum(T_i) x D] -> [B x D]."""
        _check_rank(x, 2, "mean_segments")
        lens = np.asarray(lengths, dtype=np.int64)
        if lens.size == 0 or np.any(lens < 1):
            raise EmptySequenceError(f"mean_segments: every segment needs T >= 1, got {list(lengths)}")
        if int(lens.sum()) != x.shape[0]:
            raise DimensionError(f"mean_segments: lengths sum to {int(lens.sum())}, rows {x.shape[0]}")
        starts = np.concatenate(([0], np.cumsum(lens)[:-1]))
        denom = lens.astype(np.float64)[:, None]
        pooled = np.add.reduceat(x.data, starts, axis=0) / denom
        return self._record("mean_segments", (x,), pooled,
                            lambda g: (np.repeat(g / denom, lens, axis=0),))

    def log_softmax_nll(self, logits: Tensor, labels: Sequence[int]) -> Tensor:
        """Mean negative log-likelihood of ``labels`` under softmax(logits)."""
        _check_rank(logits, 2, "log_softmax_nll")
        b, c = logits.shape
        y = np.asarray(labels, dtype=np.int64)
        if y.shape != (b,):
            raise DimensionError(f"log_softmax_nll: {y.size} labels for batch of {b}")
        bad = np.flatnonzero((y < 0) | (y >= c))
        if bad.size:
            i = int(bad[0])
            raise LabelError(f"label {int(y[i])} at index {i} outside [0, {c})", index=i)

        shifted = logits.data - logits.data.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        total = exp.sum(axis=1, keepdims=True)
        log_prob = shifted - np.log(total)
        rows = np.arange(b)
        loss = -log_prob[rows, y].sum() / b
        prob = exp / total

        def backward(g: np.ndarray) -> tuple[np.ndarray]:
            d = prob.copy()
            d[rows, y] -= 1.0
            return (d * (float(g) / b),)

        return self._record("log_softmax_nll", (logits,), np.asarray(loss), backward)

    # ------------------------------------------------------------------
    # Gradient scaling
    # ------------------------------------------------------------------

    def scale_grad(self, x: Tensor, factor: float) -> Tensor:
        """Identity forward; backward multiplies the upstream gradient by ``factor``."""
        c = float(factor)
        return self._record("scale_grad", (x,), x.data, lambda g: (g * c,))

    def grad_reverse(self, x: Tensor, gamma: float) -> Tensor:
        """Identity forward; backward multiplies the upstream gradient by ``-gamma``."""
        if not gamma >= 0.0:
            raise CoefficientError(f"grad_reverse: gamma must be non-negative, got {gamma}")
        c = -float(gamma)
        return self._record("grad_reverse", (x,), x.data, lambda g: (g * c,))

    # ------------------------------------------------------------------
    # Backward
    # ------------------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Populate ``.grad`` of every leaf that ``loss`` depends on."""
        if self._spent:
            raise GraphReuseError("backward() already ran on this graph")
        if loss.data.size != 1:
            raise RankError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss.requires_grad and id(loss) not in self._produced:
            raise GraphReuseError("loss was not produced by this graph")
        self._spent = True
        if not loss.requires_grad:
            return

        grads: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
        for node in reversed(self._nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.backward(g)):
                if gi is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in self._produced:
                    prev = grads.get(key)
                    grads[key] = gi if prev is None else prev + gi
                else:
                    inp.grad = gi.copy() if inp.grad is None else inp.grad + gi
        self._nodes.clear()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a plain array (no graph)."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)
