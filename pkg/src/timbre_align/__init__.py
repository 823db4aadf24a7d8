"""Measure how well audio representations align with human judgments of
musical timbre similarity."""

from .align import (
    AlignmentReport,
    METRICS,
    PredictedBlock,
    RowPair,
    TripletConfig,
    evaluate,
    extract_triplets,
    kendall_row,
    mae,
    ndcg_row,
    score_block,
    spearman_row,
    triplet_agreement_row,
)
from .audio import SILENT, Waveform, decode_wav, integrated_loudness, is_silent, resample
from .dataset import (
    CorpusStats,
    GroundTruthBlock,
    TimbreDataset,
    corpus_stats,
    load_corpus,
    load_dataset,
    rescale_block,
    save_dataset,
)
from .distances import ball_projection, cosine, l1, l2, neg_dot, poincare
from .features import (
    MfccConfig,
    Representation,
    SpectrogramConfig,
    load_embedding,
    mfcc,
    multi_scale_spectrogram,
    stft_magnitude,
)
from .lengths import LengthStrategy, Variant, fixed_window, pair_pad, time_average
from .sources import (
    EmbeddingSource,
    FeatureCache,
    MfccSource,
    MssSource,
    RunContext,
    StyleSource,
    sources_from_interchange,
)
from .style import (
    FeatureMap,
    StyleEmbedding,
    concat_style,
    gram_style,
    meanstd_style,
    tokens_as_featuremap,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport", "METRICS", "PredictedBlock", "RowPair", "TripletConfig",
    "evaluate", "extract_triplets", "kendall_row", "mae", "ndcg_row",
    "score_block", "spearman_row", "triplet_agreement_row",
    "SILENT", "Waveform", "decode_wav", "integrated_loudness", "is_silent",
    "resample",
    "CorpusStats", "GroundTruthBlock", "TimbreDataset", "corpus_stats",
    "load_corpus", "load_dataset", "rescale_block", "save_dataset",
    "ball_projection", "cosine", "l1", "l2", "neg_dot", "poincare",
    "MfccConfig", "Representation", "SpectrogramConfig", "load_embedding",
    "mfcc", "multi_scale_spectrogram", "stft_magnitude",
    "LengthStrategy", "Variant", "fixed_window", "pair_pad", "time_average",
    "EmbeddingSource", "FeatureCache", "MfccSource", "MssSource", "RunContext",
    "StyleSource", "sources_from_interchange",
    "FeatureMap", "StyleEmbedding", "concat_style", "gram_style",
    "meanstd_style", "tokens_as_featuremap",
]
