"""Entry point: `proctor-model-export <toys|detector|classifier> ...`."""

from __future__ import annotations

import argparse
import sys

from .real import DownloadFailure, ExportFailure, ExporterUsageError, export_classifier, export_detector
from .toys import make_toy_models


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proctor-model-export",
        description="Produce the ONNX graphs consumed by proctorpipe.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toys", help="deterministic toy fixtures (no network)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("detector", help="real pretrained detector export")
    p.add_argument("--out", required=True, help="output .onnx path")
    p.add_argument("--size", type=int, default=640, help="square input size")

    p = sub.add_parser("classifier", help="real pretrained classifier export")
    p.add_argument("--out", required=True, help="output .onnx path")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--seed", type=int, default=2024)

    args = parser.parse_args(argv)
    try:
        if args.command == "toys":
            det, cls = make_toy_models(args.out)
            print(f"wrote {det['file']} ({det['checksum'][:23]}...)")
            print(f"wrote {cls['file']} ({cls['checksum'][:23]}...)")
        elif args.command == "detector":
            manifest = export_detector(args.out, size=args.size)
            print(f"wrote {manifest['file']} output_shape={manifest['output_shape']}")
        elif args.command == "classifier":
            manifest = export_classifier(args.out, classes=args.classes, seed=args.seed)
            print(f"wrote {manifest['file']} output_shape={manifest['output_shape']}")
    except ExporterUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DownloadFailure, ExportFailure) as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
