"""Audio quality estimators: frame-energy SNR and component SRR (in dB)."""
from __future__ import annotations

import math

import numpy as np

from src.core.constants import NOISE_DECILE
from src.core.errors import DataError, UndefinedMetricError


def frame_energies(wave: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Mean squared amplitude of each full frame (no padding)."""
    x = np.asarray(wave, dtype=np.float64).ravel()
    if frame_len < 1 or hop < 1:
        raise DataError(f"frame_len and hop must be positive, got {frame_len}, {hop}")
    if x.size < frame_len:
        raise DataError(f"waveform of {x.size} samples is shorter than one frame ({frame_len})")
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    return np.mean(frames * frames, axis=1)


def snr_estimate(wave: np.ndarray, frame_len: int = 400, hop: int = 160,
                 noise_fraction: float = NOISE_DECILE) -> float:
    """Signal-to-noise ratio from the frame energy distribution.

    The noise floor is the mean energy of the lowest ``noise_fraction`` of
    frames (at least one frame); the signal is the mean of the rest.
    Returns ``math.inf`` when the noise floor is exactly zero.  A waveform
    with a single frame has no signal frames left and raises
    ``UndefinedMetricError``.
    """
    energies = np.sort(frame_energies(wave, frame_len, hop))
    if not np.any(energies > 0):
        raise UndefinedMetricError("SNR is undefined for an all-zero waveform")
    n_noise = max(1, math.ceil(noise_fraction * energies.size))
    if n_noise >= energies.size:
        raise UndefinedMetricError(f"SNR is undefined: {energies.size} frame(s) leave no signal frames "
                                   f"after a noise floor of {n_noise}")
    noise = float(np.mean(energies[:n_noise]))
    signal = float(np.mean(energies[n_noise:]))
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / noise)


def srr_components(direct: np.ndarray, reverberant: np.ndarray) -> float:
    """10 log10 of direct over reverberant energy."""
    d = np.asarray(direct, dtype=np.float64).ravel()
    r = np.asarray(reverberant, dtype=np.float64).ravel()
    if d.shape != r.shape:
        raise DataError(f"direct ({d.size}) and reverberant ({r.size}) lengths differ")
    e_rev = float(np.dot(r, r))
    if e_rev == 0.0:
        raise UndefinedMetricError("SRR is undefined when the reverberant component has zero energy")
    e_dir = float(np.dot(d, d))
    if e_dir == 0.0:
        return -math.inf
    return 10.0 * math.log10(e_dir / e_rev)
