"""Shared frame encoder and the three attribute heads.

Architecture
------------
frames [T x D_in]
  └─ encode()          num_layers x (affine, tanh), frame-wise   -> [T x D]
       ├─ mean pool    (per sample, no padding)                  -> [D]
       └─ head         theta [D x C], b [C]                      -> logits [C]

A batch is the row-wise concatenation of its samples' frames plus the list
of their lengths; pooling works segment by segment.

Adversarial heads see the encoder output through ``grad_reverse(gamma)``
and their own parameters through ``scale_grad(gamma)``: the encoder gets
``-gamma * dL_adv`` while the head descends ``gamma * L_adv``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from src.core.autograd import Graph, Tensor, softmax
from src.core.constants import (
    DEFAULT_HIDDEN_DIM, DEFAULT_INPUT_DIM, DEFAULT_NUM_LAYERS, GAMMA_MAX,
)
from src.core.errors import CoefficientError, ConfigError, DimensionError
from src.core.roles import ATTRIBUTES, Attribute, Role, RoleMap, adversarial_attributes, validate_roles

FrameBatch = Sequence[np.ndarray]


@dataclass(frozen=True)
class EncoderConfig:
    input_dim:  int = DEFAULT_INPUT_DIM
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    num_layers: int = DEFAULT_NUM_LAYERS

    def validate(self) -> None:
        for name in ("input_dim", "hidden_dim", "num_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"EncoderConfig.{name} must be >= 1, got {getattr(self, name)}")


@dataclass
class Head:
    attribute: Attribute
    weights:   Tensor      # [D x C]
    bias:      Tensor      # [C]

    @property
    def num_classes(self) -> int:
        return self.bias.shape[0]


@dataclass
class ModelState:
    """Encoder parameters, one head per attribute and the adversarial coefficients.

    ``gamma`` is keyed by the adversarial attributes of the active role map.
    ``seed``, ``epoch``, ``step`` and ``rng_state`` make resumption exact.
    """
    encoder_config: EncoderConfig
    encoder_params: list[Tensor]              # W_0, b_0, W_1, b_1, …
    heads:          dict[Attribute, Head]
    gamma:          dict[Attribute, float] = field(default_factory=dict)
    gamma_max:      float = GAMMA_MAX
    seed:           int = 0
    epoch:          int = 0
    step:           int = 0
    rng_state:      dict | None = None

    # ------------------------------------------------------------------
    # Parameter views
    # ------------------------------------------------------------------

    def parameters(self) -> list[tuple[str, Tensor]]:
        named: list[tuple[str, Tensor]] = []
        for i in range(0, len(self.encoder_params), 2):
            named.append((f"encoder.{i // 2}.weight", self.encoder_params[i]))
            named.append((f"encoder.{i // 2}.bias",   self.encoder_params[i + 1]))
        for attr in ATTRIBUTES:
            named.append((f"head.{attr.value}.weight", self.heads[attr].weights))
            named.append((f"head.{attr.value}.bias",   self.heads[attr].bias))
        return named

    @property
    def num_encoder_params(self) -> int:
        return len(self.encoder_params)

    def arrays(self) -> list[np.ndarray]:
        return [t.data for _, t in self.parameters()]

    def with_arrays(self, arrays: Sequence[np.ndarray], requires_grad: bool = False) -> "ModelState":
        """New state with the given parameter arrays, in ``parameters()`` order."""
        n_enc = self.num_encoder_params
        if len(arrays) != n_enc + 2 * len(ATTRIBUTES):
            raise DimensionError(f"expected {n_enc + 2 * len(ATTRIBUTES)} arrays, got {len(arrays)}")
        enc = [Tensor(a, requires_grad=requires_grad) for a in arrays[:n_enc]]
        heads: dict[Attribute, Head] = {}
        for k, attr in enumerate(ATTRIBUTES):
            w, b = arrays[n_enc + 2 * k], arrays[n_enc + 2 * k + 1]
            heads[attr] = Head(attr, Tensor(w, requires_grad=requires_grad),
                               Tensor(b, requires_grad=requires_grad))
        return replace(self, encoder_params=enc, heads=heads, gamma=dict(self.gamma))

    def for_grad(self) -> "ModelState":
        """Fresh leaf tensors sharing this state's arrays, ready for backward."""
        return self.with_arrays(self.arrays(), requires_grad=True)

    def gradients(self) -> list[np.ndarray]:
        """Collected ``.grad`` buffers (zeros where a parameter was unused)."""
        return [t.grad if t.grad is not None else np.zeros_like(t.data) for _, t in self.parameters()]

    def with_gamma(self, gamma: dict[Attribute, float]) -> "ModelState":
        out = replace(self, gamma=dict(gamma))
        out.validate_gamma()
        return out

    def validate_gamma(self) -> None:
        for attr, value in self.gamma.items():
            if not 0.0 <= value <= self.gamma_max:
                raise CoefficientError(f"gamma[{attr.value}] = {value} outside [0, {self.gamma_max}]")


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def init_model_state(
    encoder_config: EncoderConfig,
    roles:          RoleMap,
    gamma_init:     dict[Attribute, float] | float,
    gamma_max:      float = GAMMA_MAX,
    seed:           int   = 0,
) -> ModelState:
    """Seeded parameter initialisation (scaled normal weights, zero biases)."""
    encoder_config.validate()
    validate_roles(roles)
    rng = np.random.default_rng(seed)

    enc: list[Tensor] = []
    fan_in = encoder_config.input_dim
    for _ in range(encoder_config.num_layers):
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, encoder_config.hidden_dim))
        enc += [Tensor(w), Tensor(np.zeros(encoder_config.hidden_dim))]
        fan_in = encoder_config.hidden_dim

    d = encoder_config.hidden_dim
    heads = {
        attr: Head(attr,
                   Tensor(rng.normal(0.0, 0.1 / np.sqrt(d), size=(d, attr.num_classes))),
                   Tensor(np.zeros(attr.num_classes)))
        for attr in ATTRIBUTES
    }

    adv = adversarial_attributes(roles)
    if isinstance(gamma_init, dict):
        gamma = {a: float(gamma_init[a]) for a in adv}
    else:
        gamma = {a: float(gamma_init) for a in adv}

    state = ModelState(encoder_config, enc, heads, gamma, gamma_max=gamma_max,
                       seed=seed, rng_state=rng.bit_generator.state)
    state.validate_gamma()
    return state


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------

def encode(graph: Graph, frames: Tensor, state: ModelState) -> Tensor:
    """Frame-wise (affine, tanh) stack: [T x D_in] -> [T x D]."""
    cfg = state.encoder_config
    if frames.data.ndim != 2 or frames.shape[1] != cfg.input_dim:
        raise DimensionError(f"encode: frames {frames.shape} do not have width {cfg.input_dim}")
    h = frames
    for i in range(0, len(state.encoder_params), 2):
        w, b = state.encoder_params[i], state.encoder_params[i + 1]
        h = graph.tanh(graph.add_bias(graph.matmul(h, w), b))
    return h


def head_logits(graph: Graph, pooled: Tensor, head: Head, grad_scale: float | None = None) -> Tensor:
    """[B x D] -> [B x C]; ``grad_scale`` scales the head's parameter gradients."""
    if pooled.shape[-1] != head.weights.shape[0]:
        raise DimensionError(f"head {head.attribute.value}: input width {pooled.shape[-1]} "
                             f"vs weights {head.weights.shape}")
    w, b = head.weights, head.bias
    if grad_scale is not None:
        w, b = graph.scale_grad(w, grad_scale), graph.scale_grad(b, grad_scale)
    return graph.add_bias(graph.matmul(pooled, w), b)


def pool_and_classify(embeddings: Tensor, head: Head) -> Tensor:
    """Mean-pool [T x D] embeddings and return the head's class probabilities [C]."""
    if embeddings.data.ndim != 2:
        raise DimensionError(f"pool_and_classify: expected [T x D] embeddings, got {embeddings.shape}")
    graph = Graph()
    pooled = graph.reshape(graph.mean_axis(embeddings), 1, embeddings.shape[1])
    logits = head_logits(graph, pooled, head)
    return Tensor(softmax(logits.data)[0])


def stack_frames(batch: FrameBatch | np.ndarray) -> tuple[Tensor, list[int]]:
    """Concatenate per-sample frame arrays into one [sum(T) x D_in] tensor."""
    if isinstance(batch, np.ndarray) and batch.ndim == 2:
        batch = [batch]
    if len(batch) == 0:
        raise DimensionError("empty batch")
    lengths = [int(f.shape[0]) for f in batch]
    return Tensor(np.concatenate([np.asarray(f, dtype=np.float64) for f in batch], axis=0)), lengths


def forward_all(
    graph: Graph,
    frames: FrameBatch | np.ndarray,
    state: ModelState,
    roles: RoleMap,
    reversal: bool = True,
) -> dict[Attribute, Tensor]:
    """Logits [B x C] for the primary head and every adversarial head.

    Heads whose role is OFF are not evaluated.  With ``reversal=False`` the
    adversarial heads are wired like the primary one (no gradient scaling).
    """
    validate_roles(roles)
    x, lengths = stack_frames(frames)
    emb = encode(graph, x, state)

    logits: dict[Attribute, Tensor] = {}
    for attr in ATTRIBUTES:
        role = roles.get(attr, Role.OFF)
        if role is Role.OFF:
            continue
        if role is Role.ADVERSARIAL and reversal:
            if attr not in state.gamma:
                known = sorted(a.value for a in state.gamma)
                raise ConfigError(f"no adversarial coefficient for {attr.value}; state has {known}")
            gamma = state.gamma[attr]
            pooled = graph.mean_segments(graph.grad_reverse(emb, gamma), lengths)
            logits[attr] = head_logits(graph, pooled, state.heads[attr], grad_scale=gamma)
        else:
            pooled = graph.mean_segments(emb, lengths)
            logits[attr] = head_logits(graph, pooled, state.heads[attr])
    return logits


def embed(state: ModelState, frames: FrameBatch) -> np.ndarray:
    """Mean-pooled encoder outputs [B x D] (no gradient tracking)."""
    graph = Graph()
    x, lengths = stack_frames(frames)
    return graph.mean_segments(encode(graph, x, state), lengths).data


def predict(state: ModelState, frames: FrameBatch, attribute: Attribute) -> np.ndarray:
    """Arg-max class index per sample for one head."""
    graph = Graph()
    pooled = Tensor(embed(state, frames))
    return np.argmax(head_logits(graph, pooled, state.heads[attribute]).data, axis=1)
