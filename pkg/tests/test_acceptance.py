"""Acceptance suite: one test per release criterion, each at its stated
tolerance, printing one PASS/FAIL line per criterion."""

import functools
import json
import math
import time

import numpy as np
import pytest

from timbre_align.align import (
    METRICS,
    PredictedBlock,
    TripletConfig,
    evaluate,
    extract_triplets,
    score_block,
)
from timbre_align.cli import summarize_dataset
from timbre_align.dataset import GroundTruthBlock, corpus_stats, load_corpus, load_dataset
from timbre_align.distances import ball_projection, cosine, l1, l2, poincare
from timbre_align.errors import StrategyError, ZeroVectorError
from timbre_align.features import Representation
from timbre_align.lengths import time_average
from timbre_align.sources import MfccSource, MssSource, RunContext, sources_from_interchange
from timbre_align.studies import STUDIES, study_by_name
from timbre_align.style import FeatureMap, gram_style, meanstd_style, multi_layer_style

from . import oracles
from .test_align import _write_embeddings, _write_line_fixture, random_matrices, engine_scores


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")
        return wrapper
    return decorate


@criterion("corpus accounting (21 / 334 / 2,614)")
def test_corpus_accounting(corpus_dir):
    start = time.perf_counter()
    datasets = load_corpus(corpus_dir)
    elapsed = time.perf_counter() - start
    stats = corpus_stats(datasets)
    assert stats.n_datasets == 21
    assert stats.n_samples == 334
    assert stats.n_ratings == 2614
    assert elapsed < 1.0, f"loading took {elapsed:.2f} s"


@criterion("published length/loudness tables reproduced")
def test_summary_table_reproduction(corpus_dir):
    datasets = {ds.name: ds for ds in load_corpus(corpus_dir)}
    assert len(datasets) == 21
    for spec in STUDIES:
        summary = summarize_dataset(datasets[spec.name])
        assert abs(summary.length_mean - spec.length_mean) <= 0.01, spec.name
        assert abs(summary.length_std - spec.length_std) <= 0.01, spec.name
        assert summary.loudness_mean is not None, spec.name
        assert abs(summary.loudness_mean - spec.loudness_mean) <= 0.3, spec.name
    # spot-check the registry against published values
    patil = study_by_name("patil2012_a3")
    assert (patil.loudness_mean, patil.loudness_std) == (-19.03, 0.85)
    grey = study_by_name("grey1977")
    assert (grey.length_mean, grey.length_std) == (0.27, 0.03)


@criterion("metric oracle equivalence on 100 random datasets")
def test_metric_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.RandomState(1234)
    for trial in range(100):
        n = rng.randint(3, 13)
        quantize = 6 if trial % 5 == 0 else None
        pred, gt = random_matrices(rng, n, quantize=quantize)
        expected = oracles.brute_dataset_scores(pred, gt, margin=0.1)
        got = engine_scores(pred, gt, margin=0.1)
        for metric in METRICS:
            exp_score = expected[metric][0]
            if exp_score is None:
                assert got[metric].score is None, metric
            else:
                assert abs(got[metric].score - exp_score) <= 1e-9, metric
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"oracle suite took {elapsed:.2f} s"


@criterion("perfect and adversarial fixtures")
def test_perfect_and_adversarial_fixtures():
    rng = np.random.RandomState(7)
    n = 9
    matrix = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = rng.rand()
    gt, _ = GroundTruthBlock("d", matrix).rescale()

    perfect = score_block(PredictedBlock("d", gt.matrix.copy(), rescaled=True), gt)
    assert perfect["mae"].score == 0.0
    for metric in ("kendall", "spearman", "ndcg", "triplet"):
        assert perfect[metric].score == 1.0, metric

    inverted = score_block(
        PredictedBlock("d", 1.0 - gt.matrix, rescaled=True), gt)
    assert inverted["kendall"].score == -1.0
    assert inverted["spearman"].score == -1.0
    assert inverted["triplet"].score == 0.0


@criterion("triplet margin strictness")
def test_triplet_margin_semantics():
    triplets = extract_triplets(np.array([0.0, 0.5, 0.55]), TripletConfig(0.1))
    assert triplets == [(0, 1), (0, 2)]
    assert len(triplets) == 2


@criterion("monotone-transform invariance of rank metrics")
def test_monotone_invariance():
    rng = np.random.RandomState(99)
    for _ in range(25):
        n = rng.randint(3, 11)
        pred, gt = random_matrices(rng, n)
        moved = [[None if v is None else v ** 3 + v for v in row] for row in pred]
        base = engine_scores(pred, gt)
        transformed = engine_scores(moved, gt)
        for metric in ("kendall", "spearman", "ndcg", "triplet"):
            a, b = base[metric].score, transformed[metric].score
            if a is None:
                assert b is None
            else:
                assert abs(a - b) <= 1e-12, metric


@criterion("style-embedding algebra")
def test_style_embedding_algebra():
    start = time.perf_counter()
    rng = np.random.RandomState(5)
    for _ in range(20):
        channels = rng.randint(1, 9, size=rng.randint(1, 5))
        spatial = int(rng.randint(1, 30))
        stack = [FeatureMap(rng.randint(-6, 7, size=(c, spatial)).astype(float),
                            f"l{k}") for k, c in enumerate(channels)]
        for fm in stack:
            gram = gram_style(fm)
            np.testing.assert_array_equal(gram, gram.T)
            assert np.linalg.eigvalsh(gram).min() >= -1e-9
            perm = rng.permutation(fm.n_spatial)
            shuffled = FeatureMap(fm.data[:, perm], fm.layer_id)
            np.testing.assert_array_equal(gram_style(shuffled), gram)
            np.testing.assert_array_equal(meanstd_style(shuffled), meanstd_style(fm))
        gatys = multi_layer_style(stack, "gatys")
        huang = multi_layer_style(stack, "huang")
        assert gatys.data.size == int(np.sum(channels.astype(np.int64) ** 2))
        assert huang.data.size == int(2 * np.sum(channels))
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"style algebra took {elapsed:.2f} s"


@criterion("distance-function suite")
def test_distance_suite():
    start = time.perf_counter()
    rng = np.random.RandomState(11)
    for _ in range(1000):
        u, v, w = rng.randn(3, 6) * 3.0
        assert l1(u, v) == l1(v, u)
        assert l2(u, v) == l2(v, u)
        assert l1(u, u) == 0.0 and l2(u, u) == 0.0
        assert l1(u, w) <= l1(u, v) + l1(v, w) + 1e-9
        assert l2(u, w) <= l2(u, v) + l2(v, w) + 1e-9
        assert -1e-12 <= cosine(u, v) <= 2.0 + 1e-12

    for _ in range(200):
        direction = rng.randn(5)
        radius = rng.rand() * 0.99
        point = direction / np.linalg.norm(direction) * radius
        expected = 2.0 * math.atanh(radius)
        assert abs(poincare(np.zeros(5), point) - expected) <= 1e-9

    projected, scale = ball_projection(rng.randn(16, 4) * 10.0)
    assert scale < 1.0
    assert np.linalg.norm(projected, axis=1).max() <= 1.0 - 1e-5 + 1e-12

    with pytest.raises(ZeroVectorError):
        cosine(np.zeros(3), np.ones(3))
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"distance suite took {elapsed:.2f} s"


@criterion("length-strategy contract")
def test_length_strategy_contract(small_corpus_dir, tmp_path):
    datasets = [load_dataset(p) for p in sorted(small_corpus_dir.glob("*.json"))]

    # d(x, x) == 0 under dynamic padding for both engine feature families
    ctx = RunContext()
    for source in (MfccSource(), MssSource()):
        provider = source.provider(datasets[0], "dynamic", ctx)
        for i in range(datasets[0].n_samples):
            u, v = provider.pair(i, i)
            assert l2(u, v) == 0.0
            assert cosine(u, v) == 0.0

    # single-frame representations refuse time averaging
    single_frame = Representation(np.ones(16), None, "clap-like")
    with pytest.raises(StrategyError):
        time_average(single_frame)

    # score accounting: framed sources produce 20 scores, fixed sources 10
    framed = evaluate(datasets, [MfccSource()], strategies=("avg", "dynamic"),
                      distances=("l2", "cosine"), metrics=METRICS)
    assert len(framed.slices()) == 20

    values = _write_line_fixture(tmp_path, "acc", [0.0, 1.0, 2.0, 5.0])
    export = _write_embeddings(tmp_path, "acc", values)
    fixed = evaluate([load_dataset(tmp_path / "acc.json")],
                     sources_from_interchange(export / "manifest.json"),
                     strategies=("avg", "dynamic"),
                     distances=("l2", "cosine"), metrics=METRICS)
    assert len(fixed.slices()) == 10


@criterion("thread-count determinism")
def test_thread_determinism(small_corpus_dir):
    datasets = [load_dataset(p) for p in sorted(small_corpus_dir.glob("*.json"))]
    reports = [
        evaluate(datasets, [MfccSource()], strategies=("avg", "dynamic"),
                 distances=("l2", "cosine"), metrics=METRICS, threads=threads)
        for threads in (1, 8)
    ]
    assert reports[0].to_json_bytes() == reports[1].to_json_bytes()
    assert json.loads(reports[0].to_json_bytes())  # remains valid JSON
