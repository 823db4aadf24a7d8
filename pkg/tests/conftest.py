import json
import math
from pathlib import Path

import numpy as np
import pytest

from timbre_align.audio import Waveform, write_wav
from timbre_align.studies import synthesize_corpus


def sine(freq: float, duration: float, sample_rate: int = 44100,
         amplitude: float = 0.5) -> Waveform:
    t = np.arange(round(duration * sample_rate)) / sample_rate
    return Waveform(amplitude * np.sin(2 * math.pi * freq * t), sample_rate)


def harmonic_tone(f0: float, duration: float, brightness: float,
                  sample_rate: int = 44100) -> Waveform:
    t = np.arange(round(duration * sample_rate)) / sample_rate
    tone = np.zeros_like(t)
    for k in range(1, 13):
        tone += k ** (-brightness) * np.sin(2 * math.pi * k * f0 * t)
    return Waveform(0.4 * tone / np.abs(tone).max(), sample_rate)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    """The full 21-dataset synthetic stand-in corpus."""
    out = tmp_path_factory.mktemp("corpus")
    synthesize_corpus(out)
    return out


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory) -> Path:
    """Two tiny datasets with real WAV files, for fast end-to-end runs."""
    out = tmp_path_factory.mktemp("small_corpus")
    rng = np.random.RandomState(5)
    for name, n, base_freq in (("toy_a", 5, 220.0), ("toy_b", 4, 311.127)):
        audio_dir = out / name
        audio_dir.mkdir()
        refs = []
        brightness = np.linspace(0.7, 2.5, n)
        for i in range(n):
            w = harmonic_tone(base_freq, 0.25 + 0.05 * (i % 3), brightness[i])
            ref = f"{name}/s{i}.wav"
            write_wav(out / ref, w)
            refs.append(ref)
        ratings = []
        for i in range(n):
            for j in range(i + 1, n):
                value = abs(brightness[i] - brightness[j]) + rng.uniform(0, 0.02)
                ratings.append([i, j, float(value)])
        (out / f"{name}.json").write_text(json.dumps(
            {"name": name, "audio": refs, "ratings": ratings}))
    return out
