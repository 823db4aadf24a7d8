"""Writer side of the tensor interchange contract.

Tensors are NPY format v1.0, C-order, little-endian float32, written
atomically (temp file then rename). The sidecar ``manifest.json`` lists one
entry per tensor with the audio it came from, the time axis (null for
fixed-shape representations), a source id, and for layer taps a layer id plus
the axes convention of the stored array.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass
class ManifestEntry:
    audio: str
    tensor: str
    time_axis: int | None
    source_id: str
    layer_id: str | None = None
    axes: str | None = None            # "tokens_features" or "channels_spatial"
    window_seconds: float | None = None

    def to_dict(self) -> dict:
        doc = {k: v for k, v in asdict(self).items()
               if v is not None or k in ("time_axis",)}
        return doc


def write_tensor(path: str | Path, data: np.ndarray) -> None:
    """Write one interchange tensor atomically."""
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: refusing to write non-finite tensor")
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.lib.format.write_array(fh, data, version=(1, 0))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(path: str | Path, entries: list[ManifestEntry]) -> None:
    path = Path(path)
    doc = {"entries": [entry.to_dict() for entry in entries]}
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
