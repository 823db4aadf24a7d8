"""Minimal audio loading for model inference: decode, fold, resample, window."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile


def load_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """Decode a WAV file to mono float32 in [-1, 1] nominal range."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float32) / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float32) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float32)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise ValueError(f"{path}: no samples")
    return samples, int(rate)


def resample(samples: np.ndarray, rate: int, target_rate: int) -> np.ndarray:
    if rate == target_rate:
        return samples
    g = math.gcd(target_rate, rate)
    out = signal.resample_poly(samples, target_rate // g, rate // g,
                               window=("kaiser", 14.0))
    return out.astype(np.float32)


def pad_or_truncate(samples: np.ndarray, rate: int, seconds: float) -> np.ndarray:
    """Right zero-pad or right-truncate to an exact window length."""
    target = int(round(seconds * rate))
    if samples.size >= target:
        return samples[:target]
    return np.pad(samples, (0, target - samples.size))
