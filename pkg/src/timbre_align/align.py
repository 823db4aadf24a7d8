"""Alignment scoring between predicted and ground-truth dissimilarity blocks.

The predicted matrix for a dataset holds pairwise representation distances;
the ground truth holds averaged human ratings. Both are min-max rescaled per
block, then compared with mean absolute error over unique pairs and with four
rank metrics evaluated row by row: every sample serves once as the reference,
its row orders all other samples by dissimilarity, and the per-row scores are
averaged over all evaluated rows (globally across datasets, not per dataset).

Rows whose score is undefined (a constant side for the correlations, zero
extracted triplets, and similar) are skipped and counted, never imputed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import GroundTruthBlock, TimbreDataset, rescale_block, is_degenerate_block
from .distances import DISTANCES, projection_scale
from .errors import EmptyBlockError, TimbreAlignError, ZeroVectorError
from .sources import PairProvider, RepresentationSource, RunContext, VectorProvider

log = logging.getLogger(__name__)

METRICS = ("mae", "kendall", "spearman", "ndcg", "triplet")
THREADS_ENV_VAR = "TIMBRE_ALIGN_THREADS"


@dataclass(frozen=True)
class TripletConfig:
    """Margin for triplet extraction: a just-noticeable-difference stand-in."""

    margin: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.margin < 1.0):
            raise ValueError(f"margin must lie in [0, 1), got {self.margin}")


@dataclass
class PredictedBlock:
    """Pairwise representation distances for one dataset; NaN where undefined."""

    dataset_name: str
    matrix: np.ndarray
    rescaled: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def defined_mask(self) -> np.ndarray:
        mask = ~np.isnan(self.matrix)
        mask[np.tril_indices(self.n)] = False
        return mask

    def rescale(self) -> tuple["PredictedBlock", bool]:
        mask = self.defined_mask()
        values = self.matrix[mask]
        if values.size == 0:
            raise EmptyBlockError(f"{self.dataset_name}: predicted block has no defined pairs")
        degenerate = is_degenerate_block(values)
        scaled = rescale_block(values)
        matrix = np.full_like(self.matrix, np.nan)
        matrix[mask] = scaled
        ii, jj = np.nonzero(mask)
        matrix[jj, ii] = scaled
        return PredictedBlock(self.dataset_name, matrix, rescaled=True), degenerate


@dataclass(frozen=True)
class RowPair:
    """One reference sample's aligned predicted and ground-truth row vectors.

    Entries cover all other samples with a rating defined on both sides, in
    ascending sample-index order.
    """

    reference_index: int
    pred_row: np.ndarray
    gt_row: np.ndarray

    def __post_init__(self):
        if self.pred_row.shape != self.gt_row.shape or self.pred_row.ndim != 1:
            raise ValueError("pred_row and gt_row must be 1-D and equal length")
        if self.pred_row.size < 1:
            raise ValueError("rows must contain at least one defined pair")


# ---------------------------------------------------------------------------
# Pair-level and row-level scores
# ---------------------------------------------------------------------------

def mae(pred: PredictedBlock, gt: GroundTruthBlock) -> float:
    """Mean absolute error over unique pairs defined in both rescaled blocks."""
    if not (pred.rescaled and gt.rescaled):
        raise ValueError("both blocks must be rescaled before computing MAE")
    mask = pred.defined_mask() & gt.defined_mask()
    if not mask.any():
        raise EmptyBlockError(f"{gt.dataset_name}: no pairs defined in both blocks")
    return float(np.abs(pred.matrix[mask] - gt.matrix[mask]).mean())


def _constant(x: np.ndarray) -> bool:
    return bool(np.all(x == x[0]))


def kendall_row(rp: RowPair) -> float | None:
    """Tie-corrected Kendall rank correlation (tau-b) for one row.

    Returns None when either side is constant, in which case the row is
    skipped and counted by the caller.
    """
    x, y = rp.pred_row, rp.gt_row
    n = x.size
    if n < 2 or _constant(x) or _constant(y):
        return None
    jj, kk = np.triu_indices(n, 1)
    sx = np.sign(x[jj] - x[kk])
    sy = np.sign(y[jj] - y[kk])
    concordant = int(np.count_nonzero(sx * sy > 0))
    discordant = int(np.count_nonzero(sx * sy < 0))
    n0 = n * (n - 1) // 2
    ties_x = int(np.count_nonzero(sx == 0))
    ties_y = int(np.count_nonzero(sy == 0))
    return (concordant - discordant) / math.sqrt((n0 - ties_x) * (n0 - ties_y))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their positions."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_row(rp: RowPair) -> float | None:
    """Pearson correlation of average ranks; None when either side is constant."""
    x, y = rp.pred_row, rp.gt_row
    if x.size < 2 or _constant(x) or _constant(y):
        return None
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry)))


def relevance(gt_row: np.ndarray, gain: str = "linear") -> np.ndarray:
    """Similarity-as-relevance: 1 minus the rescaled dissimilarity."""
    rel = 1.0 - gt_row
    if gain == "exp":
        rel = np.exp2(rel) - 1.0
    elif gain != "linear":
        raise ValueError(f"unknown NDCG gain {gain!r}")
    return rel


def ndcg_row(rp: RowPair, gain: str = "linear") -> float:
    """Normalized discounted cumulative gain for one row.

    Items are ranked by predicted dissimilarity ascending (most similar
    first), ties broken by ascending sample index. A row whose relevance is
    all zero has no ideal ordering to miss, so it scores 1.
    """
    rel = relevance(rp.gt_row, gain)
    order = np.argsort(rp.pred_row, kind="stable")
    discounts = 1.0 / np.log2(np.arange(rel.size) + 2.0)
    dcg = float(rel[order] @ discounts)
    idcg = float(np.sort(rel)[::-1] @ discounts)
    if idcg == 0.0:
        return 1.0
    return dcg / idcg


def zero_relevance_row(gt_row: np.ndarray) -> bool:
    """True when every relevance value is zero (all dissimilarities equal 1)."""
    return bool(np.all(gt_row == 1.0))


def extract_triplets(gt_row: np.ndarray, cfg: TripletConfig) -> list[tuple[int, int]]:
    """Row positions (j, k), j < k, whose ratings differ by strictly more than the margin."""
    n = gt_row.size
    jj, kk = np.triu_indices(n, 1)
    keep = np.abs(gt_row[jj] - gt_row[kk]) > cfg.margin
    return list(zip(jj[keep].tolist(), kk[keep].tolist()))


def triplet_agreement_row(rp: RowPair, cfg: TripletConfig) -> tuple[float | None, int]:
    """Fraction of margin-filtered triplets ordered the same way by both rows.

    Predicted ties count as disagreement. Returns (score, n_triplets); the
    score is None when no triplet survives the margin.
    """
    triplets = extract_triplets(rp.gt_row, cfg)
    if not triplets:
        return None, 0
    jj = np.array([j for j, _ in triplets])
    kk = np.array([k for _, k in triplets])
    gt_sign = np.sign(rp.gt_row[jj] - rp.gt_row[kk])
    pred_sign = np.sign(rp.pred_row[jj] - rp.pred_row[kk])
    agree = int(np.count_nonzero(pred_sign == gt_sign))
    return agree / len(triplets), len(triplets)


def block_rows(pred: PredictedBlock, gt: GroundTruthBlock) -> list[RowPair]:
    """Row pairs over the jointly defined entries of two rescaled blocks."""
    rows = []
    joint = ~np.isnan(pred.matrix) & ~np.isnan(gt.matrix)
    np.fill_diagonal(joint, False)
    for i in range(gt.matrix.shape[0]):
        cols = np.nonzero(joint[i])[0]
        if cols.size == 0:
            continue
        rows.append(RowPair(i, pred.matrix[i, cols], gt.matrix[i, cols]))
    return rows


# ---------------------------------------------------------------------------
# Block scoring and corpus-level aggregation
# ---------------------------------------------------------------------------

@dataclass
class MetricBlockResult:
    """One metric evaluated on one dataset block, with aggregation pieces."""

    dataset: str
    score: float | None
    numer: float = 0.0       # sum of row scores, or sum of absolute errors
    denom: int = 0           # rows evaluated, or pair count
    rows_evaluated: int = 0
    rows_skipped: int = 0
    triplets_evaluated: int = 0
    degenerate_rows: int = 0
    tied_predicted_pairs: int = 0


def _count_tied_pred_pairs(rows: list[RowPair]) -> int:
    total = 0
    for rp in rows:
        jj, kk = np.triu_indices(rp.pred_row.size, 1)
        total += int(np.count_nonzero(rp.pred_row[jj] == rp.pred_row[kk]))
    return total


def score_block(
    pred: PredictedBlock,
    gt: GroundTruthBlock,
    metrics: Sequence[str] = METRICS,
    cfg: TripletConfig = TripletConfig(),
    ndcg_gain: str = "linear",
) -> dict[str, MetricBlockResult]:
    """Every requested metric for one rescaled (predicted, ground-truth) pair."""
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    rows = block_rows(pred, gt)
    results: dict[str, MetricBlockResult] = {}

    for metric in metrics:
        if metric == "mae":
            mask = pred.defined_mask() & gt.defined_mask()
            n_pairs = int(mask.sum())
            if n_pairs == 0:
                results[metric] = MetricBlockResult(gt.dataset_name, None)
                continue
            total = float(np.abs(pred.matrix[mask] - gt.matrix[mask]).sum())
            results[metric] = MetricBlockResult(
                gt.dataset_name, total / n_pairs, numer=total, denom=n_pairs
            )
            continue

        scores: list[float] = []
        skipped = 0
        triplets = 0
        degenerate = 0
        for rp in rows:
            if metric == "kendall":
                value = kendall_row(rp)
            elif metric == "spearman":
                value = spearman_row(rp)
            elif metric == "ndcg":
                value = ndcg_row(rp, ndcg_gain)
                if zero_relevance_row(rp.gt_row):
                    degenerate += 1
            else:  # triplet
                value, n_trip = triplet_agreement_row(rp, cfg)
                triplets += n_trip
            if value is None:
                skipped += 1
            else:
                scores.append(value)

        result = MetricBlockResult(
            gt.dataset_name,
            float(np.mean(scores)) if scores else None,
            numer=float(np.sum(scores)),
            denom=len(scores),
            rows_evaluated=len(scores),
            rows_skipped=skipped,
            triplets_evaluated=triplets,
            degenerate_rows=degenerate,
        )
        if metric == "ndcg":
            result.tied_predicted_pairs = _count_tied_pred_pairs(rows)
        results[metric] = result
    return results


@dataclass
class LeafResult:
    """One (representation, strategy, distance, metric) slice of the report."""

    per_dataset: dict[str, float | None] = field(default_factory=dict)
    numer: float = 0.0
    denom: int = 0
    rows_evaluated: int = 0
    rows_skipped: int = 0
    triplets_evaluated: int = 0
    degenerate_rows: int = 0
    tied_predicted_pairs: int = 0
    pairs_skipped: int = 0

    @property
    def aggregate(self) -> float | None:
        """Global mean over all evaluated rows (or pairs, for MAE)."""
        return self.numer / self.denom if self.denom else None

    def merge_block(self, block: MetricBlockResult, pairs_skipped: int) -> None:
        self.per_dataset[block.dataset] = block.score
        self.numer += block.numer
        self.denom += block.denom
        self.rows_evaluated += block.rows_evaluated
        self.rows_skipped += block.rows_skipped
        self.triplets_evaluated += block.triplets_evaluated
        self.degenerate_rows += block.degenerate_rows
        self.tied_predicted_pairs += block.tied_predicted_pairs
        self.pairs_skipped += pairs_skipped


@dataclass
class AlignmentReport:
    """Nested scores: representation -> strategy -> distance -> metric."""

    results: dict[str, dict[str, dict[str, dict[str, LeafResult]]]]
    warnings: list[str]

    def leaf(self, rep: str, strategy: str, distance: str, metric: str) -> LeafResult:
        return self.results[rep][strategy][distance][metric]

    def slices(self) -> list[tuple[str, str, str, str]]:
        out = []
        for rep, strategies in sorted(self.results.items()):
            for strategy, dists in sorted(strategies.items()):
                for distance, metrics in sorted(dists.items()):
                    for metric in sorted(metrics):
                        out.append((rep, strategy, distance, metric))
        return out

    def to_json_dict(self) -> dict:
        doc: dict = {"__warnings__": sorted(self.warnings)}
        for rep, strategies in self.results.items():
            rep_doc: dict = {}
            for strategy, dists in strategies.items():
                strat_doc: dict = {}
                for distance, metrics in dists.items():
                    dist_doc: dict = {}
                    for metric, leaf in metrics.items():
                        leaf_doc: dict = dict(leaf.per_dataset)
                        leaf_doc["__aggregate__"] = leaf.aggregate
                        leaf_doc["__rows_evaluated__"] = leaf.rows_evaluated
                        leaf_doc["__rows_skipped__"] = leaf.rows_skipped
                        leaf_doc["__pairs_skipped__"] = leaf.pairs_skipped
                        if metric == "triplet":
                            leaf_doc["__triplets_evaluated__"] = leaf.triplets_evaluated
                        if metric == "ndcg":
                            leaf_doc["__tied_predicted_pairs__"] = leaf.tied_predicted_pairs
                            leaf_doc["__degenerate_rows__"] = leaf.degenerate_rows
                        dist_doc[metric] = leaf_doc
                    strat_doc[distance] = dist_doc
                rep_doc[strategy] = strat_doc
            doc[rep] = rep_doc
        return doc

    def to_json_bytes(self) -> bytes:
        """Deterministic serialization: sorted keys, 12 significant digits."""
        doc = _round_floats(self.to_json_dict())
        return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()

    def to_csv(self) -> str:
        """One row per leaf value, aggregates included as dataset __aggregate__."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["representation", "strategy", "distance", "metric",
                         "dataset", "score"])
        for rep, strategy, distance, metric in self.slices():
            leaf = self.leaf(rep, strategy, distance, metric)
            for ds in sorted(leaf.per_dataset):
                writer.writerow([rep, strategy, distance, metric, ds,
                                 _format_score(leaf.per_dataset[ds])])
            writer.writerow([rep, strategy, distance, metric, "__aggregate__",
                             _format_score(leaf.aggregate)])
        return buf.getvalue()


def report_from_json(doc: dict) -> AlignmentReport:
    """Rebuild a report from its serialized form (scores and counts only)."""
    results: dict = {}
    for rep, strategies in doc.items():
        if rep == "__warnings__":
            continue
        for strategy, dists in strategies.items():
            for distance, metrics in dists.items():
                for metric, leaf_doc in metrics.items():
                    leaf = LeafResult(
                        per_dataset={k: v for k, v in leaf_doc.items()
                                     if not k.startswith("__")},
                        rows_evaluated=leaf_doc.get("__rows_evaluated__", 0),
                        rows_skipped=leaf_doc.get("__rows_skipped__", 0),
                        pairs_skipped=leaf_doc.get("__pairs_skipped__", 0),
                        triplets_evaluated=leaf_doc.get("__triplets_evaluated__", 0),
                        tied_predicted_pairs=leaf_doc.get("__tied_predicted_pairs__", 0),
                        degenerate_rows=leaf_doc.get("__degenerate_rows__", 0),
                    )
                    aggregate = leaf_doc.get("__aggregate__")
                    if aggregate is not None:
                        leaf.numer = aggregate
                        leaf.denom = 1
                    (results.setdefault(rep, {}).setdefault(strategy, {})
                     .setdefault(distance, {}))[metric] = leaf
    return AlignmentReport(results=results, warnings=list(doc.get("__warnings__", [])))


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def _format_score(value: float | None) -> str:
    return "" if value is None else f"{value:.12g}"


# ---------------------------------------------------------------------------
# Corpus evaluation driver
# ---------------------------------------------------------------------------

def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV_VAR, env)
    return 1


def _predicted_matrix(
    ds: TimbreDataset,
    provider: VectorProvider | PairProvider,
    distance_name: str,
) -> tuple[np.ndarray, int]:
    """Distance matrix over the dataset's rated pairs; returns (matrix, skipped)."""
    fn, needs_projection = DISTANCES[distance_name]
    n = ds.n_samples
    matrix = np.full((n, n), np.nan)
    pairs = ds.defined_pairs()
    skipped = 0

    if isinstance(provider, VectorProvider):
        vectors = provider.vectors()
        scale = 1.0
        if needs_projection:
            max_norm = max(float(np.linalg.norm(v)) for v in vectors)
            scale = projection_scale(max_norm)
        for i, j in pairs:
            u, v = vectors[i], vectors[j]
            if scale != 1.0:
                u, v = u * scale, v * scale
            try:
                value = fn(u, v)
            except ZeroVectorError:
                skipped += 1
                continue
            matrix[i, j] = matrix[j, i] = value
    else:
        scale = 1.0
        if needs_projection:
            max_norm = 0.0
            for i, j in pairs:
                u, v = provider.pair(i, j)
                max_norm = max(max_norm, float(np.linalg.norm(u)),
                               float(np.linalg.norm(v)))
            scale = projection_scale(max_norm)
        for i, j in pairs:
            u, v = provider.pair(i, j)
            if scale != 1.0:
                u, v = u * scale, v * scale
            try:
                value = fn(u, v)
            except ZeroVectorError:
                skipped += 1
                continue
            matrix[i, j] = matrix[j, i] = value
    return matrix, skipped


def _evaluate_one(
    ds: TimbreDataset,
    gt_rescaled: GroundTruthBlock,
    source: RepresentationSource,
    strategies: Sequence[str],
    distance_names: Sequence[str],
    metrics: Sequence[str],
    cfg: TripletConfig,
    ndcg_gain: str,
    ctx: RunContext,
) -> tuple[dict[tuple[str, str, str], tuple[MetricBlockResult, int]], list[str]]:
    """All requested scores for one (dataset, source) pair, plus warnings."""
    out: dict[tuple[str, str, str], tuple[MetricBlockResult, int]] = {}
    warnings: list[str] = []
    for strategy in source.effective_strategies(strategies):
        provider = source.provider(ds, strategy, ctx)
        for distance_name in distance_names:
            matrix, skipped = _predicted_matrix(ds, provider, distance_name)
            if skipped:
                warnings.append(
                    f"{ds.name} / {source.source_id} / {strategy} / {distance_name}: "
                    f"skipped {skipped} pairs with zero vectors"
                )
            pred = PredictedBlock(ds.name, matrix)
            try:
                pred, degenerate = pred.rescale()
            except EmptyBlockError:
                warnings.append(
                    f"{ds.name} / {source.source_id} / {strategy} / {distance_name}: "
                    "no pairs could be scored"
                )
                continue
            if degenerate:
                warnings.append(
                    f"{ds.name} / {source.source_id} / {strategy} / {distance_name}: "
                    "degenerate predicted block (all distances equal), rescaled to zeros"
                )
            for metric, block in score_block(pred, gt_rescaled, metrics, cfg,
                                             ndcg_gain).items():
                out[(strategy, distance_name, metric)] = (block, skipped)
    return out, warnings


def evaluate(
    datasets: Sequence[TimbreDataset],
    sources: Sequence[RepresentationSource],
    strategies: Sequence[str] = ("avg", "dynamic"),
    distances: Sequence[str] = ("l2", "cosine"),
    metrics: Sequence[str] = METRICS,
    cfg: TripletConfig = TripletConfig(),
    *,
    ndcg_gain: str = "linear",
    threads: int | None = None,
    ctx: RunContext | None = None,
) -> AlignmentReport:
    """Score every representation source against every dataset.

    Fans out over (source, dataset) jobs; each job is pure and results are
    reduced in a fixed order, so reports are identical for any thread count.
    A failing dataset is skipped with a warning instead of aborting the run.
    """
    unknown = set(distances) - set(DISTANCES)
    if unknown:
        raise ValueError(f"unknown distances: {sorted(unknown)}")
    if not datasets:
        raise ValueError("no datasets to evaluate")
    if not sources:
        raise ValueError("no representation sources to evaluate")
    ctx = ctx or RunContext()
    n_threads = resolve_threads(threads)
    warnings: list[str] = []

    gt_blocks: dict[str, GroundTruthBlock] = {}
    usable: list[TimbreDataset] = []
    for ds in datasets:
        try:
            gt, degenerate = GroundTruthBlock.from_dataset(ds).rescale()
        except EmptyBlockError:
            warnings.append(f"{ds.name}: no ratings, dataset excluded")
            continue
        if degenerate:
            warnings.append(
                f"{ds.name}: degenerate ground-truth block (all ratings equal), "
                "rescaled to zeros"
            )
        gt_blocks[ds.name] = gt
        usable.append(ds)

    jobs = [(source, ds) for source in sources for ds in usable]

    def run_job(job):
        source, ds = job
        try:
            return _evaluate_one(ds, gt_blocks[ds.name], source, strategies,
                                 distances, metrics, cfg, ndcg_gain, ctx)
        except (TimbreAlignError, FileNotFoundError, ValueError) as exc:
            return None, [f"{ds.name} / {source.source_id}: skipped ({exc})"]

    if n_threads == 1:
        outcomes = [run_job(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(run_job, jobs))

    results: dict[str, dict[str, dict[str, dict[str, LeafResult]]]] = {}
    for (source, ds), (scores, job_warnings) in zip(jobs, outcomes):
        warnings.extend(job_warnings)
        if scores is None:
            continue
        for (strategy, distance_name, metric), (block, skipped) in scores.items():
            leaf = (
                results.setdefault(source.source_id, {})
                .setdefault(strategy, {})
                .setdefault(distance_name, {})
                .setdefault(metric, LeafResult())
            )
            leaf.merge_block(block, skipped)

    return AlignmentReport(results=results, warnings=warnings)
