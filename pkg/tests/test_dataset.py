import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from timbre_align.dataset import (
    GroundTruthBlock,
    TimbreDataset,
    corpus_stats,
    is_degenerate_block,
    load_dataset,
    rescale_block,
    save_dataset,
)
from timbre_align.errors import EmptyBlockError, ManifestError

from .oracles import brute_rescale


def write_manifest(tmp_path, doc, n_audio=3, name="manifest.json"):
    for i in range(n_audio):
        (tmp_path / f"s{i}.wav").write_bytes(b"RIFF")  # existence is all that's checked here
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def make_doc(ratings, n=3):
    return {"name": "demo", "audio": [f"s{i}.wav" for i in range(n)], "ratings": ratings}


class TestLoadDataset:
    def test_minimal_well_formed(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[0, 1, 0.2], [0, 2, 0.8], [1, 2, 0.5]]))
        ds = load_dataset(path)
        assert ds.n_samples == 3
        assert ds.n_ratings == 3
        assert ds.ratings[0] == (0, 1, 0.2)

    def test_self_pair_rejected(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[2, 2, 0.1]]))
        with pytest.raises(ManifestError, match="self-pair"):
            load_dataset(path)

    def test_duplicate_pair_rejected(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[0, 1, 0.1], [0, 1, 0.2]]))
        with pytest.raises(ManifestError, match="duplicate"):
            load_dataset(path)

    def test_index_out_of_range(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[0, 3, 0.1]]))
        with pytest.raises(ManifestError, match="out of range"):
            load_dataset(path)

    def test_inverted_pair_rejected(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[1, 0, 0.1]]))
        with pytest.raises(ManifestError, match="i < j"):
            load_dataset(path)

    def test_negative_rating_rejected(self, tmp_path):
        path = write_manifest(tmp_path, make_doc([[0, 1, -0.5]]))
        with pytest.raises(ManifestError, match="finite and >= 0"):
            load_dataset(path)

    def test_missing_audio_file(self, tmp_path):
        doc = make_doc([[0, 1, 0.1]])
        doc["audio"].append("missing.wav")
        path = write_manifest(tmp_path, doc)
        with pytest.raises(ManifestError, match="missing.wav"):
            load_dataset(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ManifestError, match="cannot parse"):
            load_dataset(path)

    def test_missing_field(self, tmp_path):
        path = write_manifest(tmp_path, {"name": "x", "audio": ["s0.wav"]}, n_audio=1)
        with pytest.raises(ManifestError, match="ratings"):
            load_dataset(path)

    def test_round_trip(self, tmp_path):
        doc = make_doc([[0, 1, 0.25], [1, 2, 0.75]])
        doc["pitch"] = "Eb4"
        path = write_manifest(tmp_path, doc)
        ds = load_dataset(path)
        out = tmp_path / "copy.json"
        save_dataset(ds, out)
        assert json.loads(out.read_text()) == doc
        assert load_dataset(out).to_manifest_dict() == ds.to_manifest_dict()


class TestRescaleBlock:
    def test_already_normalized(self):
        np.testing.assert_array_equal(rescale_block([0.0, 0.5, 1.0]), [0.0, 0.5, 1.0])

    def test_min_max_arithmetic(self):
        np.testing.assert_allclose(rescale_block([2, 3, 6]), [0.0, 0.25, 1.0])

    def test_degenerate_block_maps_to_zero(self, caplog):
        with caplog.at_level("WARNING"):
            out = rescale_block([0.7, 0.7])
        np.testing.assert_array_equal(out, [0.0, 0.0])
        assert is_degenerate_block([0.7, 0.7])
        assert any("degenerate" in r.message for r in caplog.records)

    def test_empty_rejected(self):
        with pytest.raises(EmptyBlockError):
            rescale_block([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
    def test_matches_oracle(self, values):
        np.testing.assert_allclose(rescale_block(values), brute_rescale(values),
                                   atol=1e-12)

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=20))
    def test_idempotent(self, values):
        if is_degenerate_block(values):
            return
        once = rescale_block(values)
        np.testing.assert_allclose(rescale_block(once), once, atol=1e-12)

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=20),
        st.floats(0.01, 50),
        st.floats(-50, 50),
    )
    def test_positive_affine_invariance(self, values, a, b):
        # a spread too small relative to the offset is absorbed by float
        # addition, which breaks the invariant for numerical (not logical) reasons
        if max(values) - min(values) < 0.01:
            return
        transformed = [a * v + b for v in values]
        np.testing.assert_allclose(rescale_block(transformed), rescale_block(values),
                                   atol=1e-9)


class TestCorpusStats:
    def test_empty(self):
        assert corpus_stats([]) == (0, 0, 0)

    def test_full_upper_triangle(self, tmp_path):
        n = 16
        ratings = [[i, j, 0.5] for i in range(n) for j in range(i + 1, n)]
        path = write_manifest(tmp_path, make_doc(ratings, n=n), n_audio=n)
        ds = load_dataset(path)
        assert corpus_stats([ds]) == (1, 16, 120)


class TestGroundTruthBlock:
    def test_symmetric_with_nan_diagonal(self):
        ds = TimbreDataset("d", tuple(Path(f"s{i}.wav") for i in range(3)),
                           ((0, 1, 2.0), (1, 2, 3.0)))
        block = GroundTruthBlock.from_dataset(ds)
        assert block.matrix[0, 1] == block.matrix[1, 0] == 2.0
        assert np.isnan(block.matrix[0, 0])
        assert np.isnan(block.matrix[0, 2])  # missing pair stays undefined

    def test_rescale_range_and_flag(self):
        ds = TimbreDataset(
            "d", tuple(Path(f"s{i}.wav") for i in range(3)),
            ((0, 1, 2.0), (0, 2, 6.0), (1, 2, 3.0)))
        block, degenerate = GroundTruthBlock.from_dataset(ds).rescale()
        assert not degenerate
        assert block.rescaled
        assert block.matrix[0, 1] == 0.0
        assert block.matrix[0, 2] == 1.0
        assert block.matrix[1, 2] == 0.25
