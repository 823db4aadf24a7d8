"""Representation sources: things that produce one vector (or one vector per
pair) for every sample in a dataset.

Sources computed by the engine (MFCC, multi-scale spectrograms) work from
audio and support both time averaging and dynamic padding, where padding is
applied to the audio before feature computation. Sources imported through the
interchange format are either fixed-shape (single-frame models, style
embeddings) or framed; framed imports realize dynamic padding by zero-padding
representation frames, since the audio that produced them is no longer part
of the computation.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import os
import tempfile
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import Waveform, decode_wav, resample
from .dataset import TimbreDataset
from .errors import InterchangeError, StrategyError
from .features import (
    InterchangeEntry,
    MSS_FFT_SIZES,
    MfccConfig,
    Representation,
    load_interchange_manifest,
    mfcc,
    multi_scale_spectrogram,
    read_tensor,
)
from .lengths import (
    DYNAMIC_PAD,
    FIXED,
    TIME_AVERAGE,
    flatten_blocks,
    pad_to,
    time_average_blocks,
)
from .style import FeatureMap, multi_layer_style, tokens_as_featuremap

log = logging.getLogger(__name__)


class FeatureCache:
    """Concurrent cache of computed feature blocks.

    Keys are (source_id, audio path, padded length). Entries are computed
    outside the lock and inserted whole, so readers never observe a partially
    written value; duplicate computation under contention is harmless because
    feature computation is pure. An optional directory adds persistence with
    atomic writes, safe for concurrent runs.
    """

    def __init__(self, cache_dir: str | Path | None = None):
        self._mem: dict[tuple, list[Representation]] = {}
        self._lock = threading.Lock()
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _disk_path(self, key: tuple) -> Path:
        digest = hashlib.sha1(repr(key).encode()).hexdigest()
        return self.cache_dir / f"{digest}.npz"

    def get_or_compute(self, key: tuple, compute) -> list[Representation]:
        with self._lock:
            if key in self._mem:
                return self._mem[key]
        blocks = None
        if self.cache_dir:
            blocks = self._load_disk(key)
        if blocks is None:
            blocks = compute()
            if self.cache_dir:
                self._store_disk(key, blocks)
        with self._lock:
            return self._mem.setdefault(key, blocks)

    def _store_disk(self, key: tuple, blocks: list[Representation]) -> None:
        path = self._disk_path(key)
        # stored at native precision so cached and fresh runs are bit-identical
        arrays = {f"block{i}": b.data for i, b in enumerate(blocks)}
        arrays["time_axes"] = np.array(
            [-1 if b.time_axis is None else b.time_axis for b in blocks]
        )
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, **arrays)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _load_disk(self, key: tuple) -> list[Representation] | None:
        path = self._disk_path(key)
        if not path.exists():
            return None
        try:
            with np.load(path) as npz:
                time_axes = npz["time_axes"]
                blocks = []
                for i, axis in enumerate(time_axes):
                    data = npz[f"block{i}"]
                    blocks.append(
                        Representation(data, None if axis < 0 else int(axis),
                                       source_id=str(key[0]))
                    )
            return blocks
        except Exception:
            log.warning("ignoring unreadable cache entry %s", path)
            return None


@dataclass
class RunContext:
    """Shared per-run state: decoded audio, feature cache."""

    features: FeatureCache = field(default_factory=FeatureCache)
    _waveforms: dict[tuple[str, int], Waveform] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def waveform(self, path: Path, sample_rate: int | None = None) -> Waveform:
        """Decoded (and optionally resampled) audio, cached by (path, rate)."""
        key = (str(path), sample_rate or 0)
        with self._lock:
            if key in self._waveforms:
                return self._waveforms[key]
        w = decode_wav(path)
        if sample_rate is not None and w.sample_rate != sample_rate:
            w = resample(w, sample_rate)
        with self._lock:
            return self._waveforms.setdefault(key, w)


class VectorProvider(ABC):
    """One flat vector per sample (time-average and fixed-shape strategies)."""

    @abstractmethod
    def vectors(self) -> list[np.ndarray]:
        ...


class PairProvider(ABC):
    """Flat vectors computed per pair (dynamic-padding strategy)."""

    @abstractmethod
    def pair(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        ...


class _ListVectors(VectorProvider):
    def __init__(self, vectors: list[np.ndarray]):
        self._vectors = vectors

    def vectors(self) -> list[np.ndarray]:
        return self._vectors


class RepresentationSource(ABC):
    """A named producer of representations for dataset samples."""

    source_id: str
    framed: bool

    @property
    @abstractmethod
    def strategies(self) -> tuple[str, ...]:
        """Length strategies this source accepts."""

    def effective_strategies(self, requested) -> tuple[str, ...]:
        """Strategies to evaluate for this source given the requested set.

        Fixed-shape sources always contribute exactly one slice; framed
        sources contribute the requested subset of what they accept.
        """
        if self.strategies == (FIXED,):
            return (FIXED,)
        chosen = tuple(s for s in self.strategies if s in requested)
        return chosen

    @abstractmethod
    def provider(self, ds: TimbreDataset, strategy: str,
                 ctx: RunContext) -> VectorProvider | PairProvider:
        ...


# ---------------------------------------------------------------------------
# DSP feature sources (computed from audio)
# ---------------------------------------------------------------------------

class DspFeatureSource(RepresentationSource):
    """Framed features computed from audio at a fixed analysis rate."""

    framed = True

    def __init__(self, source_id: str, sample_rate: int = 44100):
        self.source_id = source_id
        self.sample_rate = sample_rate

    @property
    def strategies(self) -> tuple[str, ...]:
        return (TIME_AVERAGE, DYNAMIC_PAD)

    @abstractmethod
    def compute_blocks(self, w: Waveform) -> list[Representation]:
        ...

    def config_key(self) -> tuple:
        """Hashable feature configuration; part of every cache key so two
        differently configured sources never share entries."""
        return (self.source_id, self.sample_rate)

    def _audio(self, ds: TimbreDataset, i: int, ctx: RunContext) -> Waveform:
        return ctx.waveform(ds.resolve_audio(i), self.sample_rate)

    def _blocks(self, ds: TimbreDataset, i: int, ctx: RunContext,
                n_samples: int | None) -> list[Representation]:
        path = str(ds.resolve_audio(i))
        w = self._audio(ds, i, ctx)
        target = n_samples if n_samples is not None else len(w)
        key = (self.config_key(), path, target)
        return ctx.features.get_or_compute(
            key, lambda: self.compute_blocks(pad_to(w, target))
        )

    def provider(self, ds, strategy, ctx):
        if strategy == TIME_AVERAGE:
            vectors = [
                time_average_blocks(self._blocks(ds, i, ctx, None))
                for i in range(ds.n_samples)
            ]
            return _ListVectors(vectors)
        if strategy == DYNAMIC_PAD:
            return _DspPairProvider(self, ds, ctx)
        raise StrategyError(f"{self.source_id}: unsupported strategy {strategy!r}")


class _DspPairProvider(PairProvider):
    """Pads the shorter audio of a pair, then computes features at that length."""

    def __init__(self, source: DspFeatureSource, ds: TimbreDataset, ctx: RunContext):
        self.source = source
        self.ds = ds
        self.ctx = ctx
        self._lengths = [
            len(source._audio(ds, i, ctx)) for i in range(ds.n_samples)
        ]

    def pair(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        target = max(self._lengths[i], self._lengths[j])
        u = flatten_blocks(self.source._blocks(self.ds, i, self.ctx, target))
        v = flatten_blocks(self.source._blocks(self.ds, j, self.ctx, target))
        return u, v


class MfccSource(DspFeatureSource):
    def __init__(self, n_mfcc: int = 40, cfg: MfccConfig = MfccConfig()):
        super().__init__("mfcc", cfg.sample_rate)
        self.n_mfcc = n_mfcc
        self.cfg = cfg

    def config_key(self) -> tuple:
        return (self.source_id, self.n_mfcc) + dataclasses.astuple(self.cfg)

    def compute_blocks(self, w: Waveform) -> list[Representation]:
        return [mfcc(w, self.n_mfcc, self.cfg)]


class MssSource(DspFeatureSource):
    def __init__(self, sample_rate: int = 44100,
                 fft_sizes: tuple[int, ...] = MSS_FFT_SIZES):
        super().__init__("mss", sample_rate)
        self.fft_sizes = fft_sizes

    def config_key(self) -> tuple:
        return (self.source_id, self.sample_rate, self.fft_sizes)

    def compute_blocks(self, w: Waveform) -> list[Representation]:
        return multi_scale_spectrogram(w, self.fft_sizes)


def dsp_source(name: str) -> DspFeatureSource:
    if name == "mfcc":
        return MfccSource()
    if name == "mss":
        return MssSource()
    raise ValueError(f"unknown DSP feature {name!r} (expected mfcc or mss)")


# ---------------------------------------------------------------------------
# Imported sources (interchange files)
# ---------------------------------------------------------------------------

def _entry_index(entries: list[InterchangeEntry], base_dir: Path) -> dict[str, list[InterchangeEntry]]:
    """Index entries by resolved audio path, with a basename fallback map."""
    index: dict[str, list[InterchangeEntry]] = {}
    for entry in entries:
        resolved = str((base_dir / entry.audio).resolve())
        index.setdefault(resolved, []).append(entry)
    return index


def _lookup(index: dict[str, list[InterchangeEntry]], audio_path: Path,
            source_id: str) -> list[InterchangeEntry]:
    resolved = str(audio_path.resolve())
    if resolved in index:
        return index[resolved]
    # Fall back to basename matching when the corpus and export trees differ,
    # but only if the name is unambiguous.
    name = audio_path.name
    matches = [key for key in index if Path(key).name == name]
    if len(matches) == 1:
        return index[matches[0]]
    raise InterchangeError(
        f"{source_id}: no interchange tensor for audio {audio_path} "
        f"({len(matches)} basename matches)"
    )


class EmbeddingSource(RepresentationSource):
    """Representations imported from interchange tensors, one per sample."""

    def __init__(self, source_id: str, entries: list[InterchangeEntry], base_dir: Path):
        self.source_id = source_id
        self.base_dir = Path(base_dir)
        self._index = _entry_index(entries, self.base_dir)
        axes = {e.time_axis is not None for e in entries}
        if len(axes) > 1:
            raise InterchangeError(
                f"{source_id}: entries mix framed and fixed-shape tensors"
            )
        self.framed = axes.pop()
        self._cache: dict[str, Representation] = {}
        self._lock = threading.Lock()

    @property
    def strategies(self) -> tuple[str, ...]:
        if self.framed:
            return (TIME_AVERAGE, DYNAMIC_PAD)
        return (FIXED,)

    def _representation(self, audio_path: Path) -> Representation:
        key = str(audio_path)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        entries = _lookup(self._index, audio_path, self.source_id)
        if len(entries) != 1:
            raise InterchangeError(
                f"{self.source_id}: expected exactly one tensor per audio, got "
                f"{len(entries)} for {audio_path}"
            )
        entry = entries[0]
        data = read_tensor(self.base_dir / entry.tensor)
        rep = Representation(data, entry.time_axis, self.source_id)
        with self._lock:
            return self._cache.setdefault(key, rep)

    def provider(self, ds, strategy, ctx):
        reps = [self._representation(ds.resolve_audio(i)) for i in range(ds.n_samples)]
        if strategy == FIXED:
            return _ListVectors([np.asarray(r.data, dtype=np.float64).ravel()
                                 for r in reps])
        if strategy == TIME_AVERAGE:
            return _ListVectors([time_average_blocks([r]) for r in reps])
        if strategy == DYNAMIC_PAD:
            # Audio is no longer available here, so dynamic padding appends
            # zero frames along the time axis instead of re-running the model.
            return _FramePadPairProvider(reps)
        raise StrategyError(f"{self.source_id}: unsupported strategy {strategy!r}")


class _FramePadPairProvider(PairProvider):
    def __init__(self, reps: list[Representation]):
        self.reps = reps

    def pair(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.reps[i], self.reps[j]
        target = max(a.n_frames, b.n_frames)
        return self._flat(a, target), self._flat(b, target)

    @staticmethod
    def _flat(rep: Representation, n_frames: int) -> np.ndarray:
        data = np.asarray(rep.data, dtype=np.float64)
        pad = n_frames - data.shape[rep.time_axis]
        if pad:
            widths = [(0, 0)] * data.ndim
            widths[rep.time_axis] = (0, pad)
            data = np.pad(data, widths)
        return data.ravel()


class StyleSource(RepresentationSource):
    """Style embeddings computed from imported per-layer feature maps."""

    framed = False

    def __init__(self, base_source_id: str, kind: str,
                 entries: list[InterchangeEntry], base_dir: Path):
        self.source_id = f"{base_source_id}-{kind}"
        self.kind = kind
        self.base_dir = Path(base_dir)
        self._index = _entry_index(entries, self.base_dir)
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def strategies(self) -> tuple[str, ...]:
        return (FIXED,)

    def _vector(self, audio_path: Path) -> np.ndarray:
        key = str(audio_path)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        entries = _lookup(self._index, audio_path, self.source_id)
        maps = []
        for entry in entries:  # manifest order defines the layer order
            data = read_tensor(self.base_dir / entry.tensor)
            if entry.axes == "tokens_features":
                maps.append(tokens_as_featuremap(data, entry.layer_id or ""))
            else:
                maps.append(FeatureMap(data, entry.layer_id or ""))
        vector = multi_layer_style(maps, self.kind).data
        with self._lock:
            return self._cache.setdefault(key, vector)

    def provider(self, ds, strategy, ctx):
        if strategy != FIXED:
            raise StrategyError(f"{self.source_id}: unsupported strategy {strategy!r}")
        return _ListVectors([self._vector(ds.resolve_audio(i))
                             for i in range(ds.n_samples)])


def sources_from_interchange(manifest_path: str | Path) -> list[RepresentationSource]:
    """Build sources from one interchange manifest.

    Entries without a layer id become one embedding source per source_id;
    entries with a layer id yield a pair of style sources (gatys and huang)
    per source_id.
    """
    manifest_path = Path(manifest_path)
    entries = load_interchange_manifest(manifest_path)
    base_dir = manifest_path.parent

    plain: dict[str, list[InterchangeEntry]] = {}
    tapped: dict[str, list[InterchangeEntry]] = {}
    for entry in entries:
        bucket = tapped if entry.layer_id is not None else plain
        bucket.setdefault(entry.source_id, []).append(entry)

    out: list[RepresentationSource] = []
    for source_id in sorted(plain):
        out.append(EmbeddingSource(source_id, plain[source_id], base_dir))
    for source_id in sorted(tapped):
        out.append(StyleSource(source_id, "gatys", tapped[source_id], base_dir))
        out.append(StyleSource(source_id, "huang", tapped[source_id], base_dir))
    return out
