"""Batch export: run one model over audio files and write interchange output."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .audio import load_mono
from .interchange import ManifestEntry, write_manifest, write_tensor
from .models import ModelAdapter, build_adapter

log = logging.getLogger(__name__)


@dataclass
class ExportJob:
    model_id: str
    out_dir: Path
    taps: str | None = None              # e.g. "swin:1-3"; None exports embeddings only
    tap_point: str = "block"
    seed: int = 0
    weights_dir: str | None = None
    random_init: bool = False


@dataclass
class ExportResult:
    manifest_path: Path
    entries: list[ManifestEntry]
    failures: list[str] = field(default_factory=list)


def export_embeddings(job: ExportJob, audio_paths: list[str | Path],
                      adapter: ModelAdapter | None = None) -> ExportResult:
    """Run the model over every audio file, writing tensors and a manifest.

    The tap spec is validated before any inference so a bad job fails fast.
    Per-file inference failures are logged and skipped; the manifest lists
    exactly the tensors that were written.
    """
    adapter = adapter or build_adapter(
        job.model_id, seed=job.seed, weights_dir=job.weights_dir,
        random_init=job.random_init, tap_point=job.tap_point)
    if job.taps is not None:
        adapter.validate_tap_spec(job.taps)

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    failures: list[str] = []

    for index, audio_path in enumerate(audio_paths):
        audio_path = Path(audio_path)
        try:
            samples, rate = load_mono(audio_path)
            prepared = adapter.prepare(samples, rate)

            stem = f"{index:04d}_{audio_path.stem}"
            embedding = adapter.embed(prepared)
            tensor_name = f"{stem}.{adapter.model_id}.npy"
            write_tensor(out_dir / tensor_name, embedding)
            entries.append(ManifestEntry(
                audio=str(audio_path),
                tensor=tensor_name,
                time_axis=0 if adapter.framed else None,
                source_id=adapter.model_id,
                window_seconds=adapter.window_seconds,
            ))

            if job.taps is not None:
                for tap in adapter.taps(prepared, job.taps):
                    tap_name = f"{stem}.{adapter.model_id}.{tap.layer_id}.npy"
                    write_tensor(out_dir / tap_name, tap.data)
                    entries.append(ManifestEntry(
                        audio=str(audio_path),
                        tensor=tap_name,
                        time_axis=None,
                        source_id=adapter.model_id,
                        layer_id=tap.layer_id,
                        axes=tap.axes,
                        window_seconds=adapter.window_seconds,
                    ))
        except Exception as exc:  # per-file isolation: log, skip, keep going
            log.warning("skipping %s: %s", audio_path, exc)
            failures.append(f"{audio_path}: {exc}")

    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, entries)
    return ExportResult(manifest_path, entries, failures)
