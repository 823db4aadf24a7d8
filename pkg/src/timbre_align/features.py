"""Signal-processing representations and the tensor interchange boundary.

Framed features (STFT magnitude, MFCC, multi-scale spectrograms) are computed
here from waveforms; representations produced by external models arrive
through NPY interchange files described by a sidecar manifest.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft
from scipy.signal import get_window

from .audio import Waveform
from .errors import InterchangeError

MSS_FFT_SIZES = (4096, 2048, 1024, 512, 256, 128)


@dataclass
class Representation:
    """A real-valued tensor for one audio sample.

    ``time_axis`` marks the single axis whose length varies with input
    duration; it is None for fixed-shape embeddings.
    """

    data: np.ndarray
    time_axis: int | None
    source_id: str

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if not np.all(np.isfinite(self.data)):
            raise ValueError(f"{self.source_id}: representation contains non-finite entries")
        if self.time_axis is not None:
            if not (0 <= self.time_axis < self.data.ndim):
                raise ValueError(
                    f"{self.source_id}: time_axis {self.time_axis} out of range for "
                    f"shape {self.data.shape}"
                )
            if self.data.shape[self.time_axis] < 1:
                raise ValueError(f"{self.source_id}: time axis must have length >= 1")

    @property
    def n_frames(self) -> int | None:
        return None if self.time_axis is None else self.data.shape[self.time_axis]


@dataclass(frozen=True)
class SpectrogramConfig:
    fft_size: int
    hop: int
    window: str = "hann"
    center_pad: bool = True

    def __post_init__(self):
        if self.hop < 1:
            raise ValueError(f"hop must be >= 1, got {self.hop}")
        if self.fft_size < self.hop:
            raise ValueError(f"fft_size {self.fft_size} must be >= hop {self.hop}")
        if self.window not in ("hann", "rectangular"):
            raise ValueError(f"unsupported window {self.window!r}")


def _frame(samples: np.ndarray, fft_size: int, hop: int, center: bool) -> np.ndarray:
    """Slice a signal into (n_frames, fft_size) windows."""
    if center:
        pad = fft_size // 2
        samples = np.pad(samples, (pad, pad))
    if samples.size < fft_size:
        raise ValueError(
            f"signal of {samples.size} samples is shorter than one {fft_size}-point frame"
        )
    n_frames = (samples.size - fft_size) // hop + 1
    idx = np.arange(fft_size)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def stft_magnitude(w: Waveform, cfg: SpectrogramConfig) -> Representation:
    """Magnitude spectrogram, shape (fft_size/2 + 1) x n_frames.

    With center padding the frame count is floor(len / hop) + 1.
    """
    frames = _frame(w.samples, cfg.fft_size, cfg.hop, cfg.center_pad)
    if cfg.window == "hann":
        frames = frames * get_window("hann", cfg.fft_size, fftbins=True)
    mag = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)).T
    return Representation(mag, time_axis=1,
                          source_id=f"stft{cfg.fft_size}")


@dataclass(frozen=True)
class MfccConfig:
    """Analysis settings for MFCC; the waveform must already be at ``sample_rate``."""

    sample_rate: int = 44100
    fft_size: int = 2048
    hop: int = 512
    n_mels: int = 128
    fmin: float = 0.0
    fmax: float | None = None
    log_floor: float = 1e-10


def _hz_to_mel(f):
    """Slaney-style mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    mel = f / (200.0 / 3.0)
    log_region = f >= 1000.0
    step = np.log(6.4) / 27.0
    mel = np.where(log_region, 15.0 + np.log(np.maximum(f, 1e-12) / 1000.0) / step, mel)
    return mel


def _mel_to_hz(mel):
    mel = np.asarray(mel, dtype=np.float64)
    f = mel * (200.0 / 3.0)
    log_region = mel >= 15.0
    step = np.log(6.4) / 27.0
    f = np.where(log_region, 1000.0 * np.exp(step * (mel - 15.0)), f)
    return f


def mel_filterbank(sample_rate: int, fft_size: int, n_mels: int,
                   fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular area-normalized mel filterbank, shape (n_mels, fft_size/2 + 1)."""
    if fmax is None:
        fmax = sample_rate / 2.0
    fft_freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)
    mel_points = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)

    bank = np.zeros((n_mels, fft_freqs.size))
    for m in range(n_mels):
        lower, center, upper = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rise = (fft_freqs - lower) / max(center - lower, 1e-12)
        fall = (upper - fft_freqs) / max(upper - center, 1e-12)
        bank[m] = np.maximum(0.0, np.minimum(rise, fall))
        # Area normalization keeps the response comparable across bands.
        bank[m] *= 2.0 / (upper - lower)
    return bank


def mfcc(w: Waveform, n_mfcc: int = 40, cfg: MfccConfig = MfccConfig()) -> Representation:
    """Mel-frequency cepstral coefficients, shape n_mfcc x n_frames.

    Pipeline: power spectrogram, mel filterbank, log with floor, orthonormal
    DCT-II, keep the first ``n_mfcc`` coefficients.
    """
    if w.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"waveform is at {w.sample_rate} Hz but the MFCC analysis rate is "
            f"{cfg.sample_rate} Hz; resample first"
        )
    if n_mfcc > cfg.n_mels:
        raise ValueError(f"n_mfcc={n_mfcc} exceeds the {cfg.n_mels}-band mel filterbank")

    spec = stft_magnitude(w, SpectrogramConfig(cfg.fft_size, cfg.hop))
    power = spec.data ** 2
    bank = mel_filterbank(cfg.sample_rate, cfg.fft_size, cfg.n_mels, cfg.fmin, cfg.fmax)
    log_mel = np.log(np.maximum(bank @ power, cfg.log_floor))
    coeffs = scipy.fft.dct(log_mel, type=2, axis=0, norm="ortho")[:n_mfcc]
    return Representation(coeffs, time_axis=1, source_id="mfcc")


def multi_scale_spectrogram(
    w: Waveform, fft_sizes: tuple[int, ...] = MSS_FFT_SIZES
) -> list[Representation]:
    """Linear-magnitude spectrograms at several FFT sizes, hop = fft/4.

    Returned in the given scale order; flattening downstream concatenates the
    scales in this order.
    """
    blocks = []
    for fft_size in fft_sizes:
        cfg = SpectrogramConfig(fft_size, fft_size // 4)
        rep = stft_magnitude(w, cfg)
        rep.source_id = f"mss{fft_size}"
        blocks.append(rep)
    return blocks


# ---------------------------------------------------------------------------
# Tensor interchange: NPY v1.0, C-order, little-endian float32, plus a JSON
# manifest. This is the bit-exact contract with external exporters.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InterchangeEntry:
    audio: str
    tensor: str
    time_axis: int | None
    source_id: str
    layer_id: str | None = None
    axes: str = "channels_spatial"  # or "tokens_features" for transformer taps


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an interchange tensor, enforcing the format contract strictly."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            version = np.lib.format.read_magic(fh)
        except ValueError as exc:
            raise InterchangeError(f"{path}: not an NPY file: {exc}") from exc
        if version != (1, 0):
            raise InterchangeError(f"{path}: NPY version {version} is not 1.0")
        shape, fortran_order, dtype = np.lib.format.read_array_header_1_0(fh)
        if fortran_order:
            raise InterchangeError(f"{path}: tensor must be C-ordered")
        if dtype != np.dtype("<f4"):
            raise InterchangeError(f"{path}: dtype must be <f4, got {dtype}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.fromfile(fh, dtype="<f4", count=count)
    if data.size != count:
        raise InterchangeError(f"{path}: truncated tensor data")
    data = data.reshape(shape)
    if not np.all(np.isfinite(data)):
        raise InterchangeError(f"{path}: tensor contains NaN or Inf entries")
    return data


def write_tensor(path: str | Path, data: np.ndarray) -> None:
    """Write an interchange tensor atomically (temp file then rename)."""
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f4")
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.lib.format.write_array(fh, data, version=(1, 0))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_embedding(path: str | Path, time_axis: int | None, source_id: str) -> Representation:
    """Load one interchange tensor as a Representation."""
    data = read_tensor(path)
    if time_axis is not None and not (0 <= time_axis < data.ndim):
        raise InterchangeError(
            f"{path}: manifest time_axis {time_axis} does not fit tensor shape {data.shape}"
        )
    return Representation(data, time_axis=time_axis, source_id=source_id)


def load_interchange_manifest(path: str | Path) -> list[InterchangeEntry]:
    """Parse an interchange manifest.

    Schema: ``{"entries": [{"audio", "tensor", "time_axis", "source_id"}]}``
    with optional per-entry ``layer_id`` (feature maps for style embeddings)
    and ``axes`` ("channels_spatial" default, "tokens_features" for
    token-major transformer taps).
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InterchangeError(f"{path}: cannot parse manifest: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise InterchangeError(f"{path}: manifest must be an object with an 'entries' list")

    entries = []
    for raw in doc["entries"]:
        for key in ("audio", "tensor", "source_id"):
            if key not in raw:
                raise InterchangeError(f"{path}: entry missing required field {key!r}")
        if "time_axis" not in raw:
            raise InterchangeError(f"{path}: entry missing required field 'time_axis'")
        time_axis = raw["time_axis"]
        if time_axis is not None and not isinstance(time_axis, int):
            raise InterchangeError(f"{path}: time_axis must be an integer or null")
        axes = raw.get("axes", "channels_spatial")
        if axes not in ("channels_spatial", "tokens_features"):
            raise InterchangeError(f"{path}: unknown axes value {axes!r}")
        entries.append(
            InterchangeEntry(
                audio=str(raw["audio"]),
                tensor=str(raw["tensor"]),
                time_axis=time_axis,
                source_id=str(raw["source_id"]),
                layer_id=raw.get("layer_id"),
                axes=axes,
            )
        )
    return entries
