"""MRVF1 feature container.

Layout (little-endian)
----------------------
    b"MRVF1"  magic
    uint32    T        frame count
    uint32    D_in     frame width
    float32   T x D_in values, row-major

Waveforms use the same container with D_in = 1.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from src.core.constants import FEATURE_MAGIC
from src.core.errors import ArtifactIOError, DataError
from src.utils.atomic import write_bytes_atomic

_HEADER = struct.Struct("<5sII")


def encode_features(frames: np.ndarray) -> bytes:
    arr = np.asarray(frames)
    if arr.ndim != 2:
        raise DataError(f"features must be [T x D_in], got shape {arr.shape}")
    t, d = arr.shape
    return _HEADER.pack(FEATURE_MAGIC, t, d) + arr.astype("<f4").tobytes(order="C")


def decode_features(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < _HEADER.size:
        raise DataError(f"{source}: truncated feature header")
    magic, t, d = _HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise DataError(f"{source}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * t * d
    if len(data) != expected:
        raise DataError(f"{source}: expected {expected} bytes for {t}x{d} frames, got {len(data)}")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(t, d)
    return arr.astype(np.float64)


def write_features(path: Path, frames: np.ndarray) -> None:
    write_bytes_atomic(Path(path), encode_features(frames))


def read_features(path: Path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ArtifactIOError(path, f"cannot read features: {exc}") from exc
    return decode_features(data, source=str(path))


def write_waveform(path: Path, wave: np.ndarray) -> None:
    write_features(path, np.asarray(wave).reshape(-1, 1))


def read_waveform(path: Path) -> np.ndarray:
    frames = read_features(path)
    if frames.shape[1] != 1:
        raise DataError(f"{path}: waveform container must have D_in=1, got {frames.shape[1]}")
    return frames[:, 0]
