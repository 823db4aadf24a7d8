import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile


def write_tone(path: Path, freq: float, duration: float, brightness: float = 1.0,
               sample_rate: int = 22050) -> None:
    t = np.arange(round(duration * sample_rate)) / sample_rate
    tone = np.zeros_like(t)
    for k in range(1, 11):
        tone += k ** (-brightness) * np.sin(2 * math.pi * k * freq * t)
    tone = (0.4 * tone / np.abs(tone).max()).astype(np.float32)
    wavfile.write(path, sample_rate, tone)


@pytest.fixture(scope="session")
def tone_files(tmp_path_factory) -> list[Path]:
    root = tmp_path_factory.mktemp("tones")
    paths = []
    for i, brightness in enumerate((0.7, 1.2, 1.8, 2.4)):
        path = root / f"tone{i}.wav"
        write_tone(path, 220.0, 0.4 + 0.1 * i, brightness)
        paths.append(path)
    return paths


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory) -> Path:
    """A small engine-format dataset: WAVs plus a manifest with ratings."""
    root = tmp_path_factory.mktemp("mini_corpus")
    brightness = [0.7, 1.1, 1.6, 2.2, 2.8]
    refs = []
    for i, b in enumerate(brightness):
        ref = f"m{i}.wav"
        write_tone(root / ref, 261.6, 0.5, b)
        refs.append(ref)
    ratings = []
    for i in range(len(brightness)):
        for j in range(i + 1, len(brightness)):
            ratings.append([i, j, abs(brightness[i] - brightness[j])])
    (root / "mini.json").write_text(json.dumps(
        {"name": "mini", "audio": refs, "ratings": ratings}))
    return root
