"""Registry of the 21 public timbre-similarity studies and a synthetic
stand-in corpus generator.

The original stimuli are not redistributable, so this module can synthesize a
corpus whose per-dataset sample counts, durations, and integrated loudness
match the published summary statistics. Rating values are synthetic (derived
from the tone parameters), but the rating structure (complete upper triangle
per dataset) matches the published data, so corpus-level accounting is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import Waveform, integrated_loudness, write_wav

CORPUS_SAMPLE_RATE = 44100

_PITCH_HZ = {
    "Eb4": 311.127,
    "C4": 261.626,
    "A3": 220.0,
    "D4": 293.665,
    "G#4": 415.305,
    "A4": 440.0,
}
# "A1-4" stimuli span four octaves of A.
_A_CYCLE = (55.0, 110.0, 220.0, 440.0)


@dataclass(frozen=True)
class StudySpec:
    """Published summary statistics for one dataset."""

    name: str
    n_sounds: int
    pitch: str
    length_mean: float
    length_std: float
    loudness_mean: float
    loudness_std: float


STUDIES: tuple[StudySpec, ...] = (
    StudySpec("grey1977", 16, "Eb4", 0.27, 0.03, -14.61, 1.57),
    StudySpec("grey1978", 16, "Eb4", 0.27, 0.03, -14.87, 1.76),
    StudySpec("iverson1993_whole", 16, "C4", 3.19, 0.69, -16.62, 3.99),
    StudySpec("iverson1993_onset", 16, "C4", 0.11, 0.01, -23.24, 9.10),
    StudySpec("iverson1993_remainder", 16, "C4", 3.10, 0.70, -16.71, 4.13),
    StudySpec("mcadams1995", 18, "Eb4", 0.69, 0.19, -18.36, 4.05),
    StudySpec("lakatos2000_combined", 20, "Eb4", 1.50, 0.0, -24.08, 2.98),
    StudySpec("lakatos2000_harmonic", 17, "Eb4", 1.50, 0.0, -25.03, 2.36),
    StudySpec("lakatos2000_percussive", 18, "Eb4", 1.49, 0.05, -23.97, 3.83),
    StudySpec("barthet2010", 15, "Eb4", 1.56, 0.04, -23.77, 1.13),
    StudySpec("patil2012_a3", 11, "A3", 0.25, 0.0, -19.03, 0.85),
    StudySpec("patil2012_d4", 11, "D4", 0.25, 0.0, -19.17, 0.81),
    StudySpec("patil2012_gs4", 11, "G#4", 0.25, 0.0, -18.97, 0.81),
    StudySpec("zacharakis2015_greek", 24, "A1-4", 1.30, 0.0, -29.36, 3.84),
    StudySpec("zacharakis2015_english", 24, "A1-4", 1.30, 0.0, -29.36, 3.84),
    StudySpec("siedenburg2016_e2a_set1", 14, "Eb4", 0.50, 0.0, -23.56, 3.15),
    StudySpec("siedenburg2016_e2a_set2", 14, "Eb4", 0.50, 0.0, -23.77, 1.90),
    StudySpec("siedenburg2016_e2a_set3", 14, "Eb4", 0.50, 0.0, -23.21, 2.37),
    StudySpec("siedenburg2016_e2b", 14, "Eb4", 0.50, 0.0, -23.21, 2.37),
    StudySpec("saitis2020_gedissim", 14, "Eb4", 0.50, 0.0, -23.56, 3.15),
    StudySpec("vahidi2020", 15, "A4", 1.00, 0.0, -9.73, 3.09),
)


def study_by_name(name: str) -> StudySpec:
    for spec in STUDIES:
        if spec.name == name:
            return spec
    raise KeyError(name)


def _unit_spread(n: int, rng: np.random.RandomState) -> np.ndarray:
    """A permuted, evenly spaced pattern with exact zero mean and unit
    population std; bounded by about 1.65, so spreads never stray far."""
    if n == 1:
        return np.zeros(1)
    z = np.linspace(-1.0, 1.0, n)
    z /= z.std()
    return rng.permutation(z)


def _harmonic_tone(f0: float, n_samples: int, brightness: float,
                   even_weight: float, sample_rate: int) -> np.ndarray:
    """Sustained harmonic tone with a spectral-slope timbre parameter."""
    t = np.arange(n_samples) / sample_rate
    nyquist = 0.45 * sample_rate
    n_harmonics = min(24, max(1, int(nyquist / f0)))
    tone = np.zeros(n_samples)
    for k in range(1, n_harmonics + 1):
        amp = k ** (-brightness)
        if k % 2 == 0:
            amp *= even_weight
        tone += amp * np.sin(2.0 * math.pi * k * f0 * t)

    fade = min(int(0.005 * sample_rate), n_samples // 4)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, fade))
        tone[:fade] *= ramp
        tone[-fade:] *= ramp[::-1]
    peak = np.abs(tone).max()
    return tone * (0.5 / peak) if peak > 0 else tone


def _calibrate_loudness(samples: np.ndarray, sample_rate: int,
                        target_lufs: float) -> np.ndarray:
    """Scale a tone so the gated measurement lands on the target."""
    for _ in range(2):
        measured = integrated_loudness(Waveform(samples, sample_rate))
        samples = samples * 10.0 ** ((target_lufs - measured) / 20.0)
    return samples


def synthesize_study(spec: StudySpec, out_dir: Path, seed: int,
                     sample_rate: int = CORPUS_SAMPLE_RATE) -> dict:
    """Write one study's WAV files and return its manifest document."""
    rng = np.random.RandomState(seed)
    n = spec.n_sounds
    durations = spec.length_mean + spec.length_std * _unit_spread(n, rng)
    loudnesses = spec.loudness_mean + spec.loudness_std * _unit_spread(n, rng)
    brightness = rng.permutation(np.linspace(0.6, 3.0, n))
    even_weight = rng.permutation(np.linspace(0.1, 1.0, n))

    audio_dir = out_dir / spec.name
    audio_dir.mkdir(parents=True, exist_ok=True)
    audio_refs = []
    for i in range(n):
        if spec.pitch == "A1-4":
            f0 = _A_CYCLE[i % len(_A_CYCLE)]
        else:
            f0 = _PITCH_HZ[spec.pitch]
        n_samples = round(durations[i] * sample_rate)
        tone = _harmonic_tone(f0, n_samples, brightness[i], even_weight[i],
                              sample_rate)
        tone = _calibrate_loudness(tone, sample_rate, loudnesses[i])
        ref = f"{spec.name}/s{i:02d}.wav"
        write_wav(out_dir / ref, Waveform(tone, sample_rate))
        audio_refs.append(ref)

    # Synthetic dissimilarities: distance in tone-parameter space plus jitter,
    # one rating for every unique pair.
    b_span = brightness.max() - brightness.min()
    ratings = []
    for i in range(n):
        for j in range(i + 1, n):
            value = (abs(brightness[i] - brightness[j]) / max(b_span, 1e-9)
                     + 0.3 * abs(even_weight[i] - even_weight[j])
                     + rng.uniform(0.0, 0.05))
            ratings.append([i, j, round(float(value), 6)])

    return {
        "name": spec.name,
        "audio": audio_refs,
        "ratings": ratings,
        "pitch": spec.pitch,
    }


def synthesize_corpus(out_dir: str | Path, seed: int = 17,
                      sample_rate: int = CORPUS_SAMPLE_RATE) -> list[Path]:
    """Materialize all 21 studies; returns the manifest paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_paths = []
    for offset, spec in enumerate(STUDIES):
        doc = synthesize_study(spec, out_dir, seed + offset, sample_rate)
        path = out_dir / f"{spec.name}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        manifest_paths.append(path)
    return manifest_paths
