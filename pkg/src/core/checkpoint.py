"""Checkpoint files.

Layout
------
    b"MRVC1\\n"                     magic line
    {json header}\\n                 sorted keys, no whitespace
    float64 little-endian arrays    in header["tensors"] order, row-major

The header holds the format version, EncoderConfig, each tensor's name and
shape, gamma, gamma_max, seed, epoch/step counters and the RNG state.
Identical states serialise to identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from src.core.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from src.core.errors import ArtifactIOError, DataError
from src.core.model import EncoderConfig, ModelState
from src.core.roles import Attribute
from src.utils.atomic import write_bytes_atomic


def encode_checkpoint(state: ModelState) -> bytes:
    named = state.parameters()
    header = {
        "version":   CHECKPOINT_VERSION,
        "encoder":   {"input_dim":  state.encoder_config.input_dim,
                      "hidden_dim": state.encoder_config.hidden_dim,
                      "num_layers": state.encoder_config.num_layers},
        "tensors":   [{"name": name, "shape": list(t.shape)} for name, t in named],
        "gamma":     {a.value: float(v) for a, v in state.gamma.items()},
        "gamma_max": float(state.gamma_max),
        "seed":      state.seed,
        "epoch":     state.epoch,
        "step":      state.step,
        "rng_state": state.rng_state,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(np.ascontiguousarray(t.data, dtype="<f8").tobytes() for _, t in named)
    return CHECKPOINT_MAGIC + head + b"\n" + body


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> ModelState:
    if not data.startswith(CHECKPOINT_MAGIC):
        raise DataError(f"{source}: not a checkpoint (bad magic)")
    end = data.find(b"\n", len(CHECKPOINT_MAGIC))
    if end < 0:
        raise DataError(f"{source}: truncated checkpoint header")
    try:
        header = json.loads(data[len(CHECKPOINT_MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{source}: unreadable checkpoint header ({exc})") from None
    if header.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{source}: unsupported checkpoint version {header.get('version')!r}")

    arrays: list[np.ndarray] = []
    offset = end + 1
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise DataError(f"{source}: tensor {entry['name']} truncated")
        arrays.append(np.frombuffer(data, dtype="<f8", count=count, offset=offset)
                      .astype(np.float64).reshape(shape))
        offset += nbytes
    if offset != len(data):
        raise DataError(f"{source}: {len(data) - offset} trailing bytes after tensors")

    enc = header["encoder"]
    config = EncoderConfig(enc["input_dim"], enc["hidden_dim"], enc["num_layers"])
    skeleton = ModelState(
        encoder_config=config,
        encoder_params=[None] * (2 * config.num_layers),   # replaced by with_arrays
        heads={},
        gamma={Attribute(k): float(v) for k, v in header["gamma"].items()},
        gamma_max=float(header["gamma_max"]),
        seed=int(header["seed"]),
        epoch=int(header["epoch"]),
        step=int(header["step"]),
        rng_state=header["rng_state"],
    )
    state = skeleton.with_arrays(arrays)
    state.validate_gamma()
    return state


def save_checkpoint(state: ModelState, path: Path) -> None:
    write_bytes_atomic(Path(path), encode_checkpoint(state))


def load_checkpoint(path: Path) -> ModelState:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ArtifactIOError(path, f"cannot read checkpoint: {exc}") from exc
    return decode_checkpoint(data, source=str(path))
