"""Length strategies: making representations comparable across durations.

Three strategies exist. Time averaging squashes the time axis. Dynamic
padding zero-pads the shorter audio of a pair on the right before features
are computed, so both representations share a shape. A fixed window pads or
right-truncates audio to a set duration for models that cannot slide their
analysis window.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .audio import Waveform
from .errors import StrategyError
from .features import Representation

TIME_AVERAGE = "avg"
DYNAMIC_PAD = "dynamic"
FIXED = "fixed"


class Variant(enum.Enum):
    TIME_AVERAGE = "avg"
    DYNAMIC_PAD = "dynamic"
    FIXED_WINDOW = "fixed"


@dataclass(frozen=True)
class LengthStrategy:
    variant: Variant
    duration: float | None = None  # seconds, FIXED_WINDOW only

    def __post_init__(self):
        if self.variant is Variant.FIXED_WINDOW:
            if self.duration is None or self.duration <= 0:
                raise ValueError("fixed-window strategy needs a positive duration")
        elif self.duration is not None:
            raise ValueError(f"{self.variant.value} strategy takes no duration")


def time_average(rep: Representation) -> Representation:
    """Mean over the time axis; refuses representations that do not have one.

    Single-frame embeddings (one analysis window covering the whole input)
    must not be averaged, mirroring how fixed-window models are evaluated.
    """
    if rep.time_axis is None:
        raise StrategyError(
            f"{rep.source_id}: time averaging is not applicable, the representation "
            "has no time axis"
        )
    data = rep.data.mean(axis=rep.time_axis)
    return Representation(data, time_axis=None, source_id=rep.source_id)


def pair_pad(a: Waveform, b: Waveform) -> tuple[Waveform, Waveform]:
    """Zero-pad the shorter waveform on the right to match the longer one."""
    if a.sample_rate != b.sample_rate:
        raise StrategyError(
            f"cannot pair waveforms at different rates ({a.sample_rate} vs {b.sample_rate})"
        )
    target = max(len(a), len(b))
    return pad_to(a, target), pad_to(b, target)


def pad_to(w: Waveform, n_samples: int) -> Waveform:
    """Right zero-pad to ``n_samples``; the input is returned unchanged if equal."""
    if n_samples < len(w):
        raise ValueError(f"target {n_samples} is shorter than the waveform ({len(w)})")
    if n_samples == len(w):
        return w
    return Waveform(np.pad(w.samples, (0, n_samples - len(w))), w.sample_rate)


def fixed_window(w: Waveform, duration: float) -> Waveform:
    """Right zero-pad or right-truncate to exactly ``duration`` seconds.

    Truncation keeps the signal onset: attack transients carry most of the
    timbre information.
    """
    if duration <= 0:
        raise ValueError(f"window duration must be positive, got {duration}")
    target = int(round(duration * w.sample_rate))
    if len(w) > target:
        return Waveform(w.samples[:target], w.sample_rate)
    return pad_to(w, target)


def flatten_blocks(blocks: list[Representation]) -> np.ndarray:
    """Concatenate representation blocks into one flat float64 vector."""
    return np.concatenate([np.asarray(b.data, dtype=np.float64).ravel() for b in blocks])


def time_average_blocks(blocks: list[Representation]) -> np.ndarray:
    """Time-average each block, then concatenate into one flat vector."""
    return np.concatenate(
        [np.asarray(time_average(b).data, dtype=np.float64).ravel() for b in blocks]
    )
