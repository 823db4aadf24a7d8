"""Command-line interface: run a model over audio files, write interchange files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import ExportJob, export_embeddings
from .models import MODEL_IDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timbre-export",
        description="Serialize model embeddings and feature-map taps for the "
                    "timbre-align engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_export = sub.add_parser("export", help="run one model over audio files")
    p_export.add_argument("--model", required=True, help=f"one of {MODEL_IDS}")
    p_export.add_argument("--out", required=True, help="output directory")
    p_export.add_argument("--taps", default=None,
                          help="layer-tap spec, e.g. swin:1-3 or conv:*")
    p_export.add_argument("--tap-point", choices=("block", "input"), default="block",
                          help="tap transformer block outputs or block inputs")
    p_export.add_argument("--weights", default=None,
                          help="local directory with pretrained weights")
    p_export.add_argument("--random-init", action="store_true",
                          help="build the architecture with random weights")
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("audio", nargs="*", help="WAV files to process")
    p_export.set_defaults(func=cmd_export)

    p_models = sub.add_parser("models", help="list available model adapters")
    p_models.set_defaults(func=cmd_models)
    return parser


def cmd_export(args: argparse.Namespace) -> int:
    job = ExportJob(
        model_id=args.model,
        out_dir=Path(args.out),
        taps=args.taps,
        tap_point=args.tap_point,
        seed=args.seed,
        weights_dir=args.weights,
        random_init=args.random_init,
    )
    try:
        result = export_embeddings(job, args.audio)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for failure in result.failures:
        print(f"warning: {failure}", file=sys.stderr)
    print(f"wrote {len(result.entries)} tensors to {result.manifest_path}")
    return 1 if result.failures else 0


def cmd_models(args: argparse.Namespace) -> int:
    for model_id in MODEL_IDS:
        print(model_id)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
