import json

import pytest

from timbre_export.cli import main
from timbre_export.export import ExportJob, export_embeddings


class TestExportJob:
    def test_one_entry_per_tensor_file(self, tone_files, tmp_path):
        job = ExportJob("toy-cnn", tmp_path / "out", taps="conv:1-2")
        result = export_embeddings(job, tone_files)
        assert not result.failures
        doc = json.loads(result.manifest_path.read_text())
        tensors = sorted(p.name for p in (tmp_path / "out").glob("*.npy"))
        listed = sorted(e["tensor"] for e in doc["entries"])
        assert tensors == listed
        # 1 embedding + 2 taps per audio file
        assert len(doc["entries"]) == 3 * len(tone_files)

    def test_window_metadata_recorded(self, tone_files, tmp_path):
        job = ExportJob("toy-cnn", tmp_path / "out")
        result = export_embeddings(job, tone_files[:1])
        entry = json.loads(result.manifest_path.read_text())["entries"][0]
        assert entry["window_seconds"] == 2.0
        assert entry["time_axis"] is None

    def test_framed_model_records_time_axis(self, tone_files, tmp_path):
        job = ExportJob("toy-transformer", tmp_path / "out")
        result = export_embeddings(job, tone_files[:2])
        entries = json.loads(result.manifest_path.read_text())["entries"]
        assert all(e["time_axis"] == 0 for e in entries)
        assert all("window_seconds" not in e for e in entries)

    def test_empty_audio_list_writes_empty_manifest(self, tmp_path):
        job = ExportJob("toy-cnn", tmp_path / "out")
        result = export_embeddings(job, [])
        doc = json.loads(result.manifest_path.read_text())
        assert doc == {"entries": []}

    def test_bad_file_skipped_and_reported(self, tone_files, tmp_path):
        broken = tmp_path / "broken.wav"
        broken.write_bytes(b"not a wav at all")
        job = ExportJob("toy-cnn", tmp_path / "out")
        result = export_embeddings(job, [tone_files[0], broken])
        assert len(result.failures) == 1
        assert "broken.wav" in result.failures[0]
        assert len(result.entries) == 1  # the good file still exported

    def test_invalid_tap_spec_fails_before_inference(self, tone_files, tmp_path):
        job = ExportJob("toy-cnn", tmp_path / "out", taps="conv:1-9")
        with pytest.raises(ValueError, match="out of range"):
            export_embeddings(job, tone_files)

    def test_deterministic_exports(self, tone_files, tmp_path):
        for name in ("a", "b"):
            job = ExportJob("toy-transformer", tmp_path / name, taps="enc:*")
            export_embeddings(job, tone_files[:2])
        a_files = sorted((tmp_path / "a").glob("*.npy"))
        b_files = sorted((tmp_path / "b").glob("*.npy"))
        for fa, fb in zip(a_files, b_files):
            assert fa.read_bytes() == fb.read_bytes(), fa.name


class TestCli:
    def test_export_subcommand(self, tone_files, tmp_path, capsys):
        code = main(["export", "--model", "toy-cnn", "--taps", "conv:*",
                     "--out", str(tmp_path / "out")]
                    + [str(p) for p in tone_files[:2]])
        assert code == 0
        assert "wrote" in capsys.readouterr().out
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_unknown_model_exits_two(self, tmp_path, capsys):
        code = main(["export", "--model", "nope", "--out", str(tmp_path)])
        assert code == 2
        assert "unknown model" in capsys.readouterr().err

    def test_failures_exit_one(self, tmp_path, capsys):
        broken = tmp_path / "bad.wav"
        broken.write_bytes(b"junk")
        code = main(["export", "--model", "toy-cnn", "--out",
                     str(tmp_path / "out"), str(broken)])
        assert code == 1

    def test_models_listing(self, capsys):
        assert main(["models"]) == 0
        out = capsys.readouterr().out
        assert "toy-cnn" in out and "clap-music" in out
