"""Command line entry: ``maskgen run`` and ``maskgen models``."""

from __future__ import annotations

import argparse
import json
import sys

from .jobs import MaskGenJob, generate
from .segment import available_models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskgen",
        description="generate mask archives for scene datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="segment a directory of images")
    p.add_argument("input_dir")
    p.add_argument("output_dir")
    p.add_argument("--model", default="region-grow-v1")
    p.add_argument("--device", default="cpu",
                   help="device hint passed to the model loader")
    p.add_argument("--labels", default=None,
                   help="JSON file {image_id: {mask_id: {label, shape_class}}}")
    p.add_argument("--size", type=int, default=1024,
                   help="working resolution for scenes and masks")

    sub.add_parser("models", help="list registered models")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "models":
        for name in available_models():
            print(name)
        return 0

    job = MaskGenJob(input_dir=args.input_dir, output_dir=args.output_dir,
                     model=args.model, device=args.device,
                     labels_path=args.labels, size=args.size)
    report = generate(job)
    json.dump(report.to_doc(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 1 if report.errors else 0


if __name__ == "__main__":
    sys.exit(main())
