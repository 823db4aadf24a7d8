"""Timbre-similarity datasets: manifest IO, validation, and block rescaling.

A dataset is a list of audio files plus sparse upper-triangular human
dissimilarity ratings (higher value = more different). Ratings across
datasets never mix; each dataset forms one block of the corpus-level
block-diagonal ground-truth matrix.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptyBlockError, ManifestError

log = logging.getLogger(__name__)


class CorpusStats(NamedTuple):
    n_datasets: int
    n_samples: int
    n_ratings: int


@dataclass(frozen=True)
class TimbreDataset:
    """Audio sample references plus averaged human dissimilarity ratings.

    ``ratings`` holds (i, j, value) with 0 <= i < j < N; missing pairs are
    allowed and are excluded from every metric downstream. ``audio_refs`` are
    stored as written in the manifest and resolve against ``root``.
    """

    name: str
    audio_refs: tuple[Path, ...]
    ratings: tuple[tuple[int, int, float], ...]
    pitch: str | None = None
    root: Path = Path(".")

    def __post_init__(self):
        n = len(self.audio_refs)
        if not self.name:
            raise ManifestError("dataset name must be non-empty")
        seen = set()
        for i, j, value in self.ratings:
            if i == j:
                raise ManifestError(f"{self.name}: self-pair ({i}, {j}) is not allowed")
            if not (0 <= i < j < n):
                raise ManifestError(
                    f"{self.name}: rating pair ({i}, {j}) out of range for {n} samples "
                    "(indices must satisfy 0 <= i < j < N)"
                )
            if (i, j) in seen:
                raise ManifestError(f"{self.name}: duplicate rating for pair ({i}, {j})")
            seen.add((i, j))
            if not np.isfinite(value) or value < 0:
                raise ManifestError(
                    f"{self.name}: rating for pair ({i}, {j}) must be finite and >= 0, "
                    f"got {value!r}"
                )

    @property
    def n_samples(self) -> int:
        return len(self.audio_refs)

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    def resolve_audio(self, i: int) -> Path:
        return self.root / self.audio_refs[i]

    def defined_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for i, j, _ in self.ratings)

    def to_manifest_dict(self) -> dict:
        doc = {
            "name": self.name,
            "audio": [str(p) for p in self.audio_refs],
            "ratings": [[i, j, v] for i, j, v in self.ratings],
        }
        if self.pitch is not None:
            doc["pitch"] = self.pitch
        return doc


def load_dataset(path: str | Path) -> TimbreDataset:
    """Load and validate one dataset manifest.

    Manifest JSON: ``{"name": str, "audio": [paths], "ratings": [[i, j, v]]}``
    with optional ``"pitch"``. Audio paths resolve relative to the manifest's
    directory and must exist.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot parse manifest: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    for key in ("name", "audio", "ratings"):
        if key not in doc:
            raise ManifestError(f"{path}: manifest missing required field {key!r}")
    if not isinstance(doc["audio"], list) or not doc["audio"]:
        raise ManifestError(f"{path}: field 'audio' must be a non-empty list")
    if not isinstance(doc["ratings"], list):
        raise ManifestError(f"{path}: field 'ratings' must be a list")

    base = path.parent
    audio_refs = []
    for ref in doc["audio"]:
        resolved = base / ref
        if not resolved.exists():
            raise ManifestError(f"{path}: referenced audio file not found: {ref}")
        audio_refs.append(Path(ref))

    ratings = []
    for entry in doc["ratings"]:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ManifestError(f"{path}: each rating must be [i, j, value], got {entry!r}")
        i, j, value = entry
        if not (isinstance(i, int) and isinstance(j, int)):
            raise ManifestError(f"{path}: rating indices must be integers, got {entry!r}")
        ratings.append((i, j, float(value)))

    try:
        return TimbreDataset(
            name=str(doc["name"]),
            audio_refs=tuple(audio_refs),
            ratings=tuple(ratings),
            pitch=doc.get("pitch"),
            root=base,
        )
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from exc


def save_dataset(ds: TimbreDataset, path: str | Path) -> None:
    """Write a manifest that ``load_dataset`` reads back to an equal dataset."""
    Path(path).write_text(json.dumps(ds.to_manifest_dict(), indent=1) + "\n")


def load_corpus(manifest_dir: str | Path) -> list[TimbreDataset]:
    """Load every ``*.json`` manifest in a directory, sorted by filename."""
    manifest_dir = Path(manifest_dir)
    paths = sorted(manifest_dir.glob("*.json"))
    return [load_dataset(p) for p in paths]


def corpus_stats(datasets: Iterable[TimbreDataset]) -> CorpusStats:
    """Dataset, sample, and rating totals over a corpus."""
    n_datasets = n_samples = n_ratings = 0
    for ds in datasets:
        n_datasets += 1
        n_samples += ds.n_samples
        n_ratings += ds.n_ratings
    return CorpusStats(n_datasets, n_samples, n_ratings)


def is_degenerate_block(values: Sequence[float] | np.ndarray) -> bool:
    """True when all defined entries are equal, so min-max rescaling collapses."""
    values = np.asarray(values, dtype=np.float64)
    return bool(values.size) and float(values.max()) == float(values.min())


def rescale_block(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Min-max rescale the defined entries of one block to [0, 1].

    A degenerate block (max == min) maps to all zeros; a warning is logged so
    a bad representation cannot crash a corpus-wide run.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyBlockError("cannot rescale a block with no defined entries")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        log.warning("degenerate block: all %d entries equal %g, rescaling to zeros",
                    values.size, lo)
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


@dataclass
class GroundTruthBlock:
    """Square symmetric dissimilarity matrix for one dataset.

    Undefined entries (missing pairs and the diagonal) are NaN.
    """

    dataset_name: str
    matrix: np.ndarray
    rescaled: bool = False

    @classmethod
    def from_dataset(cls, ds: TimbreDataset) -> "GroundTruthBlock":
        n = ds.n_samples
        matrix = np.full((n, n), np.nan)
        for i, j, value in ds.ratings:
            matrix[i, j] = value
            matrix[j, i] = value
        return cls(ds.name, matrix)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def defined_mask(self) -> np.ndarray:
        """Upper-triangular boolean mask of defined pairs."""
        mask = ~np.isnan(self.matrix)
        mask[np.tril_indices(self.n)] = False
        return mask

    def rescale(self) -> tuple["GroundTruthBlock", bool]:
        """Per-block min-max rescaled copy plus a degenerate flag."""
        mask = self.defined_mask()
        values = self.matrix[mask]
        if values.size == 0:
            raise EmptyBlockError(f"{self.dataset_name}: block has no defined pairs")
        degenerate = is_degenerate_block(values)
        scaled = rescale_block(values)
        matrix = np.full_like(self.matrix, np.nan)
        matrix[mask] = scaled
        ii, jj = np.nonzero(mask)
        matrix[jj, ii] = scaled
        return GroundTruthBlock(self.dataset_name, matrix, rescaled=True), degenerate
