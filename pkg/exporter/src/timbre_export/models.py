"""Model adapters: wrap a network so the exporter can ask for embeddings and
per-layer feature-map taps in a uniform way.

Two lightweight deterministic models (a small CNN and a small transformer
encoder) ship for pipeline tests and demos. The CLAP adapter drives the
transformers implementation, either from locally stored pretrained weights or
randomly initialized for smoke testing; its Swin blocks are tapped via
forward hooks.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .audio import pad_or_truncate, resample

TOKENS_FEATURES = "tokens_features"
CHANNELS_SPATIAL = "channels_spatial"


@dataclass
class Tap:
    layer_id: str
    data: np.ndarray
    axes: str


class ModelAdapter(ABC):
    """One model's inference surface: fixed input rate, optional fixed window."""

    model_id: str
    sample_rate: int
    window_seconds: float | None
    framed: bool  # True when embed() returns (frames, dim) with time axis 0

    def prepare(self, samples: np.ndarray, rate: int) -> np.ndarray:
        samples = resample(samples, rate, self.sample_rate)
        if self.window_seconds is not None:
            samples = pad_or_truncate(samples, self.sample_rate, self.window_seconds)
        return samples.astype(np.float32)

    @abstractmethod
    def embed(self, samples: np.ndarray) -> np.ndarray:
        """Embedding for prepared samples: (dim,) or (frames, dim) if framed."""

    def validate_tap_spec(self, spec: str) -> None:
        raise ValueError(f"{self.model_id} does not support layer taps")

    def taps(self, samples: np.ndarray, spec: str) -> list[Tap]:
        raise ValueError(f"{self.model_id} does not support layer taps")


def _parse_range_spec(spec: str, family: str, n_layers: int) -> list[int]:
    """Parse "family:A-B" (1-based, inclusive) into 0-based layer indices."""
    match = re.fullmatch(rf"{family}:(\d+)-(\d+)", spec)
    if spec == f"{family}:*":
        return list(range(n_layers))
    if not match:
        raise ValueError(
            f"invalid tap spec {spec!r}; expected {family}:A-B or {family}:*"
        )
    start, end = int(match.group(1)), int(match.group(2))
    if not (1 <= start <= end <= n_layers):
        raise ValueError(
            f"tap spec {spec!r} out of range; model has {n_layers} {family} layers"
        )
    return list(range(start - 1, end))


def _log_spectrogram(samples: np.ndarray, fft_size: int = 256,
                     hop: int = 128) -> np.ndarray:
    """Log-magnitude spectrogram (freq x time) used by both toy models."""
    if samples.size < fft_size:
        samples = np.pad(samples, (0, fft_size - samples.size))
    n_frames = (samples.size - fft_size) // hop + 1
    idx = np.arange(fft_size)[None, :] + hop * np.arange(n_frames)[:, None]
    window = np.hanning(fft_size)
    frames = samples[idx] * window
    mag = np.abs(np.fft.rfft(frames, axis=1)).T
    return np.log1p(mag).astype(np.float32)


class ToyCnnAdapter(ModelAdapter):
    """Small fixed-window CNN over a spectrogram; deterministic random weights.

    Mimics shift-sensitive sound-analysis models: input is padded or
    truncated to a two-second window, so one embedding frame comes out.
    """

    model_id = "toy-cnn"
    sample_rate = 16000
    window_seconds = 2.0
    framed = False
    _N_CONVS = 2

    def __init__(self, seed: int = 0):
        torch.manual_seed(seed)
        self.conv1 = nn.Conv2d(1, 8, 5, stride=2, padding=2)
        self.conv2 = nn.Conv2d(8, 16, 3, stride=2, padding=1)
        for module in (self.conv1, self.conv2):
            module.eval()
            for p in module.parameters():
                p.requires_grad_(False)

    def _activations(self, samples: np.ndarray) -> list[torch.Tensor]:
        spec = _log_spectrogram(samples)
        x = torch.from_numpy(spec)[None, None]
        with torch.no_grad():
            a1 = torch.relu(self.conv1(x))
            a2 = torch.relu(self.conv2(a1))
        return [a1[0], a2[0]]

    def embed(self, samples: np.ndarray) -> np.ndarray:
        final = self._activations(samples)[-1]
        return final.mean(dim=(1, 2)).numpy()  # global average pool -> (16,)

    def validate_tap_spec(self, spec: str) -> None:
        _parse_range_spec(spec, "conv", self._N_CONVS)

    def taps(self, samples: np.ndarray, spec: str) -> list[Tap]:
        indices = _parse_range_spec(spec, "conv", self._N_CONVS)
        activations = self._activations(samples)
        return [Tap(f"conv{i + 1}", activations[i].numpy(), CHANNELS_SPATIAL)
                for i in indices]


class ToyTransformerAdapter(ModelAdapter):
    """Small sliding transformer encoder; emits framed token embeddings."""

    model_id = "toy-transformer"
    sample_rate = 16000
    window_seconds = None
    framed = True
    _D_MODEL = 32
    _N_LAYERS = 2

    def __init__(self, seed: int = 0):
        torch.manual_seed(seed)
        self.proj = nn.Linear(129, self._D_MODEL)
        layer = nn.TransformerEncoderLayer(
            d_model=self._D_MODEL, nhead=4, dim_feedforward=64,
            batch_first=True, dropout=0.0)
        self.encoder = nn.TransformerEncoder(layer, num_layers=self._N_LAYERS)
        self.proj.eval()
        self.encoder.eval()
        for p in list(self.proj.parameters()) + list(self.encoder.parameters()):
            p.requires_grad_(False)

    def _layer_outputs(self, samples: np.ndarray) -> list[torch.Tensor]:
        spec = _log_spectrogram(samples)  # (freq 129, time)
        tokens = torch.from_numpy(spec.T)[None]  # (1, T, 129)
        outputs = []
        with torch.no_grad():
            x = self.proj(tokens)
            for layer in self.encoder.layers:
                x = layer(x)
                outputs.append(x[0])  # (T, d_model)
        return outputs

    def embed(self, samples: np.ndarray) -> np.ndarray:
        return self._layer_outputs(samples)[-1].numpy()  # (T, d) time axis 0

    def validate_tap_spec(self, spec: str) -> None:
        _parse_range_spec(spec, "enc", self._N_LAYERS)

    def taps(self, samples: np.ndarray, spec: str) -> list[Tap]:
        indices = _parse_range_spec(spec, "enc", self._N_LAYERS)
        outputs = self._layer_outputs(samples)
        return [Tap(f"enc{i + 1}", outputs[i].numpy(), TOKENS_FEATURES)
                for i in indices]


class ClapAdapter(ModelAdapter):
    """CLAP audio tower via transformers, with Swin block taps.

    ``weights_dir`` loads locally stored pretrained weights; ``random_init``
    builds the default architecture with random weights for pipeline tests.
    Audio is zero-padded (or truncated) to the model window before inference.
    """

    sample_rate = 48000
    framed = False

    def __init__(self, model_id: str = "clap-music", window_seconds: float = 10.0,
                 weights_dir: str | None = None, random_init: bool = False,
                 seed: int = 0, tap_point: str = "block"):
        from transformers import ClapConfig, ClapFeatureExtractor, ClapModel

        self.model_id = model_id
        self.window_seconds = window_seconds
        if tap_point not in ("block", "input"):
            raise ValueError(f"tap_point must be 'block' or 'input', got {tap_point!r}")
        self.tap_point = tap_point

        if weights_dir:
            self.model = ClapModel.from_pretrained(weights_dir).eval()
            try:
                self.extractor = ClapFeatureExtractor.from_pretrained(weights_dir)
            except OSError:
                self.extractor = ClapFeatureExtractor(truncation="rand_trunc")
        elif random_init:
            torch.manual_seed(seed)
            self.model = ClapModel(ClapConfig()).eval()
            self.extractor = ClapFeatureExtractor(truncation="rand_trunc")
        else:
            raise ValueError(
                f"{model_id}: pass weights_dir for pretrained weights or "
                "random_init=True for a smoke-test model"
            )
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.sample_rate = int(self.extractor.sampling_rate)

    def _input_features(self, samples: np.ndarray) -> torch.Tensor:
        batch = self.extractor(samples, sampling_rate=self.sample_rate,
                               return_tensors="pt")
        return batch["input_features"]

    def embed(self, samples: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            out = self.model.get_audio_features(
                input_features=self._input_features(samples))
        if isinstance(out, torch.Tensor):
            vec = out
        elif getattr(out, "pooler_output", None) is not None:
            vec = out.pooler_output
        else:
            vec = out[0]
        return vec[0].numpy()

    def _blocks(self) -> list[list[nn.Module]]:
        layers = self.model.audio_model.audio_encoder.layers
        return [list(layer.blocks) for layer in layers]

    def validate_tap_spec(self, spec: str) -> None:
        _parse_range_spec(spec, "swin", len(self._blocks()))

    def taps(self, samples: np.ndarray, spec: str) -> list[Tap]:
        layer_indices = _parse_range_spec(spec, "swin", len(self._blocks()))
        blocks = self._blocks()
        captured: list[tuple[str, np.ndarray]] = []
        handles = []

        def make_hook(name):
            def hook(module, inputs, output):
                if self.tap_point == "input":
                    hidden = inputs[0]
                else:
                    hidden = output[0] if isinstance(output, tuple) else output
                captured.append((name, hidden[0].detach().numpy()))
            return hook

        for li in layer_indices:
            for bi, block in enumerate(blocks[li]):
                handles.append(block.register_forward_hook(
                    make_hook(f"swin{li + 1}b{bi + 1}")))
        try:
            with torch.no_grad():
                self.model.get_audio_features(
                    input_features=self._input_features(samples))
        finally:
            for handle in handles:
                handle.remove()
        return [Tap(name, tokens, TOKENS_FEATURES) for name, tokens in captured]


def build_adapter(name: str, *, seed: int = 0, weights_dir: str | None = None,
                  random_init: bool = False, tap_point: str = "block") -> ModelAdapter:
    """Instantiate a registered model adapter by id."""
    if name == "toy-cnn":
        return ToyCnnAdapter(seed=seed)
    if name == "toy-transformer":
        return ToyTransformerAdapter(seed=seed)
    if name in ("clap-music", "clap-laion"):
        return ClapAdapter(name, window_seconds=10.0, weights_dir=weights_dir,
                           random_init=random_init, seed=seed, tap_point=tap_point)
    if name == "clap-ms":
        return ClapAdapter(name, window_seconds=7.0, weights_dir=weights_dir,
                           random_init=random_init, seed=seed, tap_point=tap_point)
    raise ValueError(
        f"unknown model {name!r}; available: toy-cnn, toy-transformer, "
        "clap-music, clap-laion, clap-ms"
    )


MODEL_IDS = ("toy-cnn", "toy-transformer", "clap-music", "clap-laion", "clap-ms")
