"""Serialize audio-model embeddings and feature maps into the interchange
format consumed by the timbre-align evaluation engine."""

from .export import ExportJob, ExportResult, export_embeddings
from .interchange import ManifestEntry, write_manifest, write_tensor
from .models import ModelAdapter, Tap, build_adapter

__version__ = "0.1.0"

__all__ = [
    "ExportJob", "ExportResult", "export_embeddings",
    "ManifestEntry", "write_manifest", "write_tensor",
    "ModelAdapter", "Tap", "build_adapter",
]
