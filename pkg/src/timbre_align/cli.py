"""Command-line entry points: eval, summarize, convert, synth-corpus."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import align
from .audio import decode_wav, integrated_loudness, is_silent
from .dataset import TimbreDataset, load_corpus
from .distances import DISTANCES
from .errors import TimbreAlignError
from .sources import RepresentationSource, FeatureCache, RunContext, dsp_source, \
    sources_from_interchange
from .studies import synthesize_corpus
from .svg import render_report_svg

EXIT_OK = 0
EXIT_WARNINGS = 1
EXIT_INPUT_ERROR = 2

DSP_FEATURES = ("mfcc", "mss")


@dataclass
class RunConfig:
    """Validated settings for one evaluation run."""

    manifest_dir: Path
    features: tuple[str, ...] = ()
    embedding_dirs: tuple[Path, ...] = ()
    strategies: tuple[str, ...] = ("avg", "dynamic")
    distances: tuple[str, ...] = ("l2", "cosine")
    metrics: tuple[str, ...] = align.METRICS
    margin: float = 0.1
    ndcg_gain: str = "linear"
    out_path: Path | None = None
    csv_path: Path | None = None
    plot_path: Path | None = None
    threads: int | None = None
    cache_dir: Path | None = None

    def __post_init__(self):
        if not self.features and not self.embedding_dirs:
            raise ValueError("no representation sources: pass --features or --embeddings")
        if not self.distances:
            raise ValueError("at least one distance is required")
        if not self.metrics:
            raise ValueError("at least one metric is required")
        if not self.strategies:
            raise ValueError("at least one length strategy is required")
        if not (0.0 <= self.margin < 1.0):
            raise ValueError(f"margin must lie in [0, 1), got {self.margin}")
        for name in self.features:
            if name not in DSP_FEATURES:
                raise ValueError(f"unknown feature {name!r} (choose from {DSP_FEATURES})")
        for name in self.distances:
            if name not in DISTANCES:
                raise ValueError(f"unknown distance {name!r}")
        for name in self.metrics:
            if name not in align.METRICS:
                raise ValueError(f"unknown metric {name!r}")
        for name in self.strategies:
            if name not in ("avg", "dynamic"):
                raise ValueError(f"unknown length strategy {name!r}")


def build_sources(cfg: RunConfig) -> list[RepresentationSource]:
    sources: list[RepresentationSource] = [dsp_source(name) for name in cfg.features]
    for directory in cfg.embedding_dirs:
        manifest = Path(directory) / "manifest.json"
        sources.extend(sources_from_interchange(manifest))
    seen: set[str] = set()
    for source in sources:
        if source.source_id in seen:
            raise TimbreAlignError(
                f"duplicate representation id {source.source_id!r}; results would "
                "collide in the report (rename source_id in one manifest)"
            )
        seen.add(source.source_id)
    return sources


def run_eval(cfg: RunConfig) -> align.AlignmentReport:
    """Library-level entry point behind the eval subcommand."""
    datasets = load_corpus(cfg.manifest_dir)
    if not datasets:
        raise TimbreAlignError(f"no dataset manifests found in {cfg.manifest_dir}")
    sources = build_sources(cfg)
    ctx = RunContext(features=FeatureCache(cfg.cache_dir))
    return align.evaluate(
        datasets,
        sources,
        strategies=cfg.strategies,
        distances=cfg.distances,
        metrics=cfg.metrics,
        cfg=align.TripletConfig(cfg.margin),
        ndcg_gain=cfg.ndcg_gain,
        threads=cfg.threads,
        ctx=ctx,
    )


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        cfg = RunConfig(
            manifest_dir=Path(args.manifests),
            features=_split(args.features),
            embedding_dirs=tuple(Path(d) for d in args.embeddings or ()),
            strategies=_split(args.length),
            distances=_split(args.distances),
            metrics=_split(args.metrics),
            margin=args.margin,
            ndcg_gain=args.ndcg_gain,
            out_path=Path(args.out),
            csv_path=Path(args.csv) if args.csv else None,
            plot_path=Path(args.plot) if args.plot else None,
            threads=args.threads,
            cache_dir=Path(args.cache_dir) if args.cache_dir else None,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        report = run_eval(cfg)
    except (TimbreAlignError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        cfg.out_path.write_bytes(report.to_json_bytes())
        if cfg.csv_path:
            cfg.csv_path.write_text(report.to_csv())
        if cfg.plot_path:
            cfg.plot_path.write_text(render_report_svg(report))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    for message in sorted(report.warnings):
        print(f"warning: {message}", file=sys.stderr)
    n_slices = len(report.slices())
    print(f"wrote {cfg.out_path} ({n_slices} result slices, "
          f"{len(report.warnings)} warnings)")
    return EXIT_WARNINGS if report.warnings else EXIT_OK


@dataclass
class DatasetSummary:
    name: str
    n_samples: int
    pitch: str | None
    length_mean: float
    length_std: float
    loudness_mean: float | None
    loudness_std: float | None
    n_silent: int = 0
    errors: list[str] = field(default_factory=list)


def summarize_dataset(ds: TimbreDataset, block_size: float = 0.08) -> DatasetSummary:
    """Per-dataset duration and integrated-loudness statistics."""
    durations = []
    loudnesses = []
    n_silent = 0
    errors = []
    for i in range(ds.n_samples):
        path = ds.resolve_audio(i)
        try:
            w = decode_wav(path)
            durations.append(w.duration)
            value = integrated_loudness(w, block_size)
        except (TimbreAlignError, ValueError, OSError) as exc:
            errors.append(f"{path.name}: {exc}")
            continue
        if is_silent(value):
            n_silent += 1
        else:
            loudnesses.append(value)
    return DatasetSummary(
        name=ds.name,
        n_samples=ds.n_samples,
        pitch=ds.pitch,
        length_mean=float(np.mean(durations)) if durations else math.nan,
        length_std=float(np.std(durations)) if durations else math.nan,
        loudness_mean=float(np.mean(loudnesses)) if loudnesses else None,
        loudness_std=float(np.std(loudnesses)) if loudnesses else None,
        n_silent=n_silent,
        errors=errors,
    )


def cmd_summarize(args: argparse.Namespace) -> int:
    try:
        datasets = load_corpus(Path(args.manifests))
    except (TimbreAlignError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    header = f"{'dataset':<28}{'N':>4}  {'pitch':<7}{'length (s)':<16}loudness (LUFS)"
    print(header)
    print("-" * len(header))
    had_warnings = False
    for ds in datasets:
        summary = summarize_dataset(ds, block_size=args.block_size)
        for message in summary.errors:
            had_warnings = True
            print(f"warning: {ds.name}: {message}", file=sys.stderr)
        length = f"{summary.length_mean:.2f} ± {summary.length_std:.2f}"
        if summary.loudness_mean is None:
            loudness = "silent" if summary.n_silent else "n/a"
        else:
            loudness = f"{summary.loudness_mean:.2f} ± {summary.loudness_std:.2f}"
            if summary.n_silent:
                loudness += f" ({summary.n_silent} silent)"
        print(f"{summary.name:<28}{summary.n_samples:>4}  "
              f"{summary.pitch or '-':<7}{length:<16}{loudness}")
    return EXIT_WARNINGS if had_warnings else EXIT_OK


def convert_matrix(matrix_path: Path, audio_dir: Path, name: str,
                   out_path: Path, pitch: str | None = None) -> int:
    """Convert a square dissimilarity-matrix CSV plus an audio directory into
    a dataset manifest. Blank cells and the diagonal are treated as missing;
    lower-triangle values are accepted when symmetric with the upper."""
    rows = []
    with open(matrix_path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([cell.strip() for cell in row])
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise TimbreAlignError(f"{matrix_path}: matrix must be square, got "
                               f"{[len(r) for r in rows]} columns over {n} rows")

    matrix = np.full((n, n), np.nan)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            if cell:
                matrix[i, j] = float(cell)

    audio_files = sorted(Path(audio_dir).glob("*.wav"))
    if len(audio_files) != n:
        raise TimbreAlignError(
            f"{audio_dir}: found {len(audio_files)} wav files but the matrix has {n} rows"
        )
    # paths must resolve relative to the manifest we are about to write
    base = out_path.resolve().parent
    audio = [os.path.relpath(p.resolve(), base) for p in audio_files]

    ratings = []
    for i in range(n):
        for j in range(i + 1, n):
            upper, lower = matrix[i, j], matrix[j, i]
            if not math.isnan(upper) and not math.isnan(lower) \
                    and not math.isclose(upper, lower, rel_tol=1e-6, abs_tol=1e-9):
                raise TimbreAlignError(
                    f"{matrix_path}: asymmetric entries at ({i}, {j}): "
                    f"{upper} vs {lower}"
                )
            value = lower if math.isnan(upper) else upper
            if not math.isnan(value):
                ratings.append([i, j, float(value)])

    doc = {"name": name, "audio": audio, "ratings": ratings}
    if pitch:
        doc["pitch"] = pitch
    out_path.write_text(json.dumps(doc, indent=1) + "\n")
    return len(ratings)


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        n = convert_matrix(Path(args.matrix), Path(args.audio_dir), args.name,
                           Path(args.out), args.pitch)
    except (TimbreAlignError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(f"wrote {args.out} ({n} ratings)")
    return EXIT_OK


def cmd_synth_corpus(args: argparse.Namespace) -> int:
    paths = synthesize_corpus(Path(args.out), seed=args.seed)
    print(f"wrote {len(paths)} dataset manifests under {args.out}")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
        report = align.report_from_json(doc)
    except (OSError, json.JSONDecodeError, AttributeError, TypeError) as exc:
        print(f"error: cannot read report {args.report}: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    Path(args.out).write_text(render_report_svg(report))
    print(f"wrote {args.out}")
    return EXIT_OK


def _split(value: str | None) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(part.strip() for part in value.split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timbre-align",
        description="Score audio representations against human timbre-similarity ratings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run an evaluation and write a report")
    p_eval.add_argument("--manifests", required=True, help="directory of dataset manifests")
    p_eval.add_argument("--features", default="", help="comma list: mfcc,mss")
    p_eval.add_argument("--embeddings", action="append", default=[],
                        help="directory with interchange manifest.json (repeatable)")
    p_eval.add_argument("--length", default="avg,dynamic",
                        help="length strategies for framed sources: avg,dynamic")
    p_eval.add_argument("--distances", default="l2,cosine",
                        help="comma list from: l1,l2,cosine,negdot,poincare")
    p_eval.add_argument("--metrics", default=",".join(align.METRICS),
                        help="comma list from: mae,kendall,spearman,ndcg,triplet")
    p_eval.add_argument("--margin", type=float, default=0.1,
                        help="triplet-agreement margin (default 0.1)")
    p_eval.add_argument("--ndcg-gain", choices=("linear", "exp"), default="linear")
    p_eval.add_argument("--out", required=True, help="report JSON path")
    p_eval.add_argument("--csv", help="optional flattened CSV path")
    p_eval.add_argument("--plot", help="optional SVG bar-chart path")
    p_eval.add_argument("--threads", type=int, default=None,
                        help="worker threads (or set TIMBRE_ALIGN_THREADS)")
    p_eval.add_argument("--cache-dir", help="persistent feature cache directory")
    p_eval.set_defaults(func=cmd_eval)

    p_sum = sub.add_parser("summarize",
                           help="print per-dataset length and loudness tables")
    p_sum.add_argument("--manifests", required=True)
    p_sum.add_argument("--block-size", type=float, default=0.08,
                       help="loudness gating block in seconds (default 0.08)")
    p_sum.set_defaults(func=cmd_summarize)

    p_conv = sub.add_parser("convert",
                            help="convert a dissimilarity-matrix CSV to a manifest")
    p_conv.add_argument("--matrix", required=True, help="square CSV of ratings")
    p_conv.add_argument("--audio-dir", required=True,
                        help="directory whose sorted *.wav files match matrix rows")
    p_conv.add_argument("--name", required=True)
    p_conv.add_argument("--pitch", default=None)
    p_conv.add_argument("--out", required=True)
    p_conv.set_defaults(func=cmd_convert)

    p_synth = sub.add_parser("synth-corpus",
                             help="synthesize the 21-dataset stand-in corpus")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=17)
    p_synth.set_defaults(func=cmd_synth_corpus)

    p_plot = sub.add_parser("plot", help="render an SVG chart from a report JSON")
    p_plot.add_argument("--report", required=True)
    p_plot.add_argument("--out", required=True)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
