"""Waveform decoding, resampling, and gated integrated-loudness measurement.

Loudness follows the ITU-R BS.1770 recipe: a two-stage K-weighting prefilter
(high-frequency shelf followed by a high-pass), mean-square energy over
overlapping gating blocks, an absolute gate at -70 LUFS, and a relative gate
10 LU below the absolute-gated mean. The block length is configurable because
very short stimuli need blocks shorter than the standard 400 ms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .errors import DecodeError

#: Sentinel returned when every gating block falls below the absolute gate.
SILENT = float("-inf")

ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = 10.0
BLOCK_OVERLAP = 0.75

# Published BS.1770 second-order sections for 48 kHz: shelf stage then
# high-pass stage, rows are (b0, b1, b2, a0, a1, a2).
_K_WEIGHTING_SOS_48K = np.array(
    [
        [1.53512485958697, -2.69169618940638, 1.19839281085285,
         1.0, -1.69065929318241, 0.73248077421585],
        [1.0, -2.0, 1.0, 1.0, -1.99004745483398, 0.99007225036621],
    ]
)

# Analog prototype constants that reproduce the published 48 kHz tables when
# run through the bilinear redesign below.
_SHELF_F0 = 1681.9744509555319
_SHELF_GAIN_DB = 3.99984385397
_SHELF_Q = 0.7071752369554193
_HIGHPASS_F0 = 38.13547087602444
_HIGHPASS_Q = 0.5003270373238773


@dataclass(frozen=True)
class Waveform:
    """A mono audio signal: finite float samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {samples.shape}")
        if samples.size < 1:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


def decode_wav(path: str | Path) -> Waveform:
    """Decode a RIFF/WAVE file to a mono waveform in the [-1, 1] nominal range.

    Integer PCM (8/16/24/32 bit) is scaled by its full-scale value; IEEE float
    data is taken as-is, so float samples outside [-1, 1] are preserved.
    Multichannel audio is folded to mono by the channel mean.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DecodeError(f"{path}: cannot decode WAV file: {exc}") from exc
    if data.size == 0:
        raise DecodeError(f"{path}: file contains no samples")

    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # 24-bit PCM arrives widened to int32, so the same scale applies.
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise DecodeError(f"{path}: unsupported sample format {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if not np.all(np.isfinite(samples)):
        raise DecodeError(f"{path}: decoded samples contain non-finite values")
    return Waveform(samples, int(rate))


def write_wav(path: str | Path, w: Waveform) -> None:
    """Write a waveform as a 32-bit float WAV file."""
    wavfile.write(str(path), w.sample_rate, w.samples.astype(np.float32))


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited resampling to ``target_rate``.

    Output length is round(len * target / source). The identity conversion
    returns the input samples unchanged.
    """
    if target_rate <= 0:
        raise ValueError(f"target rate must be positive, got {target_rate}")
    if target_rate == w.sample_rate:
        return Waveform(w.samples.copy(), w.sample_rate)

    g = math.gcd(target_rate, w.sample_rate)
    up, down = target_rate // g, w.sample_rate // g
    # beta 14 keeps the passband flat enough for sub-1e-3 round-trip error
    out = signal.resample_poly(w.samples, up, down, window=("kaiser", 14.0))
    n_target = round(len(w) * target_rate / w.sample_rate)
    if out.size > n_target:
        out = out[:n_target]
    elif out.size < n_target:
        out = np.pad(out, (0, n_target - out.size))
    return Waveform(out, target_rate)


def k_weighting_sos(rate: int) -> np.ndarray:
    """K-weighting prefilter as two second-order sections for ``rate``.

    At 48 kHz the published BS.1770 coefficients are returned verbatim; any
    other rate is derived by redesigning the underlying analog shelf and
    high-pass through the bilinear transform.
    """
    if rate == 48000:
        return _K_WEIGHTING_SOS_48K.copy()
    return redesign_k_weighting(rate)


def redesign_k_weighting(rate: int) -> np.ndarray:
    """Bilinear redesign of the K-weighting stages for an arbitrary rate."""
    k = math.tan(math.pi * _SHELF_F0 / rate)
    vh = 10.0 ** (_SHELF_GAIN_DB / 20.0)
    vb = vh ** 0.499666774155
    a0 = 1.0 + k / _SHELF_Q + k * k
    shelf = [
        (vh + vb * k / _SHELF_Q + k * k) / a0,
        2.0 * (k * k - vh) / a0,
        (vh - vb * k / _SHELF_Q + k * k) / a0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / _SHELF_Q + k * k) / a0,
    ]

    k = math.tan(math.pi * _HIGHPASS_F0 / rate)
    a0 = 1.0 + k / _HIGHPASS_Q + k * k
    highpass = [
        1.0,
        -2.0,
        1.0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / _HIGHPASS_Q + k * k) / a0,
    ]
    return np.array([shelf, highpass])


def integrated_loudness(w: Waveform, block_size: float = 0.08) -> float:
    """Gated integrated loudness in LUFS.

    The signal is K-weighted once, split into blocks of ``block_size`` seconds
    with 75% overlap, gated at -70 LUFS absolute and then at 10 LU below the
    absolute-gated mean, and the mean energy of the surviving blocks is
    converted back to loudness. Returns ``SILENT`` (-inf) when every block is
    gated out.
    """
    block = int(round(block_size * w.sample_rate))
    if block < 1 or len(w) < block:
        raise ValueError(
            f"waveform of {len(w)} samples is shorter than one "
            f"{block_size:g} s gating block"
        )
    hop = max(1, int(round(block * (1.0 - BLOCK_OVERLAP))))

    weighted = signal.sosfilt(k_weighting_sos(w.sample_rate), w.samples)
    n_blocks = (len(weighted) - block) // hop + 1
    starts = np.arange(n_blocks) * hop
    energies = np.empty(n_blocks)
    for idx, start in enumerate(starts):
        seg = weighted[start:start + block]
        energies[idx] = np.mean(seg * seg)

    with np.errstate(divide="ignore"):
        block_loudness = -0.691 + 10.0 * np.log10(energies)

    above_absolute = block_loudness > ABSOLUTE_GATE_LUFS
    if not above_absolute.any():
        return SILENT
    relative_gate = (
        -0.691 + 10.0 * np.log10(energies[above_absolute].mean()) - RELATIVE_GATE_LU
    )
    gated = above_absolute & (block_loudness > relative_gate)
    if not gated.any():
        return SILENT
    return float(-0.691 + 10.0 * np.log10(energies[gated].mean()))


def is_silent(loudness: float) -> bool:
    """True for the all-blocks-gated-out sentinel."""
    return loudness == SILENT
