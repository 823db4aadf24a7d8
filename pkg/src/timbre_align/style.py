"""Style embeddings computed from feature maps.

Two kinds are supported: channel-correlation Gram matrices ("gatys") and
channel-wise mean/standard-deviation statistics ("huang"). Both discard the
spatial arrangement of activations, so they are invariant to where an audio
event sits on the spectrogram, and both can be concatenated across layers to
mix levels of abstraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATYS = "gatys"
HUANG = "huang"


@dataclass
class FeatureMap:
    """Channels x spatial activations from one layer.

    Any trailing grid (H, W) or (time, freq) is flattened into the single
    spatial axis.
    """

    data: np.ndarray
    layer_id: str

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim < 2:
            raise ValueError(f"{self.layer_id}: feature map needs >= 2 axes, got {data.ndim}")
        if data.ndim > 2:
            data = data.reshape(data.shape[0], -1)
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"{self.layer_id}: feature map axes must be non-empty")
        if not np.all(np.isfinite(data)):
            raise ValueError(f"{self.layer_id}: feature map contains non-finite entries")
        self.data = data

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_spatial(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class StyleEmbedding:
    data: np.ndarray
    kind: str
    layer_ids: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in (GATYS, HUANG):
            raise ValueError(f"unknown style kind {self.kind!r}")
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64).ravel())


def gram_style(fm: FeatureMap, normalize: bool = True) -> np.ndarray:
    """Channel-correlation Gram matrix, shape (C, C).

    G[a, b] averages the product of channels a and b over spatial positions,
    so the result is symmetric and positive semidefinite. ``normalize=False``
    returns raw inner products instead of the spatial mean.
    """
    gram = fm.data @ fm.data.T
    if normalize:
        gram /= fm.n_spatial
    return gram


def meanstd_style(fm: FeatureMap) -> np.ndarray:
    """Per-channel mean then population std over spatial positions, length 2C.

    Population std keeps S == 1 well-defined (std 0). The std comes from the
    moment identity var = E[x^2] - mean^2 so the result depends only on
    order-independent sums, keeping the embedding invariant under spatial
    permutations.
    """
    s = fm.n_spatial
    means = fm.data.sum(axis=1) / s
    second_moment = (fm.data ** 2).sum(axis=1) / s
    variances = np.maximum(second_moment - means ** 2, 0.0)
    return np.concatenate([means, np.sqrt(variances)])


def tokens_as_featuremap(tokens: np.ndarray, layer_id: str) -> FeatureMap:
    """Adapt a (tokens x features) block: features become channels, tokens spatial."""
    tokens = np.asarray(tokens)
    if tokens.ndim != 2:
        raise ValueError(f"{layer_id}: token block must be 2-D, got shape {tokens.shape}")
    return FeatureMap(np.ascontiguousarray(tokens.T), layer_id)


def style_embedding(fm: FeatureMap, kind: str, normalize_gram: bool = True) -> StyleEmbedding:
    """Flat single-layer style embedding of the requested kind."""
    if kind == GATYS:
        return StyleEmbedding(gram_style(fm, normalize_gram).ravel(), GATYS, (fm.layer_id,))
    if kind == HUANG:
        return StyleEmbedding(meanstd_style(fm), HUANG, (fm.layer_id,))
    raise ValueError(f"unknown style kind {kind!r}")


def concat_style(embeddings: list[StyleEmbedding]) -> StyleEmbedding:
    """Concatenate same-kind embeddings in layer order into one flat vector."""
    if not embeddings:
        raise ValueError("cannot concatenate an empty list of style embeddings")
    kinds = {e.kind for e in embeddings}
    if len(kinds) > 1:
        raise ValueError(f"cannot mix style kinds {sorted(kinds)}")
    layer_ids = tuple(lid for e in embeddings for lid in e.layer_ids)
    return StyleEmbedding(np.concatenate([e.data for e in embeddings]),
                          embeddings[0].kind, layer_ids)


def multi_layer_style(maps: list[FeatureMap], kind: str,
                      normalize_gram: bool = True) -> StyleEmbedding:
    """Per-layer embeddings concatenated in the given layer order."""
    return concat_style([style_embedding(fm, kind, normalize_gram) for fm in maps])
