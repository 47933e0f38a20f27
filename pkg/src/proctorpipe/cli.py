"""Command-line interface.

One binary, seven subcommands: harmonize, split, run, eval, ablate-label,
bench, report. Flag precedence is command line > config file (--config or
$PROCTORPIPE_CONFIG, JSON) > built-in default. Exit codes: 0 success,
1 usage error, 2 data error, 3 model/runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import datakit, delivery, evalkit, imgio, pipeline
from .classify import NormalizationSpec
from .datakit import IMAGE_EXTENSIONS, HarmonizedRecord
from .detection import DetectorConfig
from .errors import DataError, ModelError, ProctorError, UsageError
from .evalkit import EvalPair
from .runtime import load_model
from .types import BBox, ClassLabel, NOT_CHEATING, iou

ENV_CONFIG = "PROCTORPIPE_CONFIG"

DEFAULTS = {
    "detector_path": None,
    "classifier_path": None,
    "conf_threshold": 0.25,
    "iou_threshold": 0.45,
    "cls_threshold": 0.5,
    "det_size": 640,
    "norm_mean": (0.485, 0.456, 0.406),
    "norm_std": (0.229, 0.224, 0.225),
    "seed": 2024,
    "jobs": 1,
    "roi_expand": 0.0,
}


@dataclass(frozen=True)
class AppConfig:
    detector_path: Optional[str]
    classifier_path: Optional[str]
    conf_threshold: float
    iou_threshold: float
    cls_threshold: float
    det_size: int
    norm_mean: Tuple[float, float, float]
    norm_std: Tuple[float, float, float]
    seed: int
    jobs: int
    roi_expand: float

    def pipeline_config(self) -> pipeline.PipelineConfig:
        return pipeline.PipelineConfig(
            detector=DetectorConfig(
                conf_threshold=self.conf_threshold,
                iou_threshold=self.iou_threshold,
                input_size=self.det_size,
            ),
            norm=NormalizationSpec(mean=self.norm_mean, std=self.norm_std),
            cls_threshold=self.cls_threshold,
            roi_expand=self.roi_expand,
        )


def resolve_config(args: argparse.Namespace) -> AppConfig:
    """Merge CLI flags over config-file values over built-in defaults."""
    merged = dict(DEFAULTS)
    config_path = getattr(args, "config", None) or os.environ.get(ENV_CONFIG)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {config_path}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {config_path} is not valid JSON: {exc}")
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    overrides = {
        "detector_path": getattr(args, "detector", None),
        "classifier_path": getattr(args, "classifier", None),
        "conf_threshold": getattr(args, "conf", None),
        "iou_threshold": getattr(args, "iou", None),
        "cls_threshold": getattr(args, "cls_threshold", None),
        "det_size": getattr(args, "det_size", None),
        "norm_mean": getattr(args, "norm_mean", None),
        "norm_std": getattr(args, "norm_std", None),
        "seed": getattr(args, "seed", None),
        "jobs": getattr(args, "jobs", None),
        "roi_expand": getattr(args, "roi_expand", None),
    }
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged["norm_mean"] = _triple(merged["norm_mean"], "norm_mean")
    merged["norm_std"] = _triple(merged["norm_std"], "norm_std")
    return AppConfig(**merged)


def _triple(value, name) -> Tuple[float, float, float]:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 3:
        raise UsageError(f"--{name.replace('_', '-')} needs 3 comma-separated values")
    return tuple(float(p) for p in parts)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems become exit code 1
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="proctorpipe",
        description="Two-stage exam-room monitoring toolkit.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (or ${ENV_CONFIG})")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--detector", help="path to detector graph (.onnx)")
    model_flags.add_argument("--classifier", help="path to classifier graph (.onnx)")
    model_flags.add_argument("--conf", type=float, help="detector confidence threshold (default 0.25)")
    model_flags.add_argument("--iou", type=float, help="NMS IoU threshold (default 0.45)")
    model_flags.add_argument("--det-size", type=int, dest="det_size", help="detector input size (default 640)")
    model_flags.add_argument("--cls-threshold", type=float, dest="cls_threshold", help="cheating decision threshold (default 0.5)")
    model_flags.add_argument("--norm-mean", dest="norm_mean", help="ROI mean triple, comma-separated")
    model_flags.add_argument("--norm-std", dest="norm_std", help="ROI std triple, comma-separated")
    model_flags.add_argument("--roi-expand", type=float, dest="roi_expand", help="fractional ROI margin (default 0)")
    model_flags.add_argument("--jobs", type=int, help="parallel frame workers (default 1)")

    p = sub.add_parser("harmonize", parents=[common], help="ingest sources into one manifest")
    p.add_argument("--sources", required=True, help="comma-separated source directories")
    p.add_argument("--out", required=True, help="output manifest (.jsonl)")
    p.add_argument("--report", help="ingest report path (default <out>.report.json)")

    p = sub.add_parser("split", parents=[common], help="deterministic 80/10/10 split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, help="shuffle seed (default 2024)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--group-by-image",
        action="store_true",
        help="keep all boxes of an image in one split (avoids cross-split leakage)",
    )

    p = sub.add_parser("run", parents=[common, model_flags], help="run the two-stage pipeline")
    p.add_argument("--input", required=True, help="manifest .jsonl, image file, or directory")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("bench", parents=[common, model_flags], help="latency benchmark only")
    p.add_argument("--input", required=True, help="manifest .jsonl, image file, or directory")
    p.add_argument("--out", required=True, help="bench report path (.json)")
    p.add_argument("--repeat", type=int, default=1, help="process the frame list N times")

    p = sub.add_parser("eval", parents=[common], help="score predictions against truth")
    p.add_argument("--truth", required=True, help="truth manifest (.jsonl)")
    p.add_argument("--pred", required=True, help="verdicts file from `run` (.jsonl)")
    p.add_argument("--out", required=True, help="metrics report path (.json)")
    p.add_argument("--out-csv", dest="out_csv", help="2x2 confusion matrix CSV path")
    p.add_argument("--match-iou", type=float, default=0.5, help="box match threshold (default 0.5)")

    p = sub.add_parser("ablate-label", parents=[common], help="full-frame labels per image")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output .jsonl (default stdout)")

    p = sub.add_parser("report", parents=[common], help="emit private per-student reports")
    p.add_argument("--verdicts", required=True, help="verdicts file from `run` (.jsonl)")
    p.add_argument("--seats", required=True, help="seat map JSON")
    p.add_argument("--outbox", required=True, help="directory for .eml files")
    p.add_argument("--flag-count", type=int, default=1, dest="flag_count")

    return parser


# --- subcommand implementations ----------------------------------------------


def _cmd_harmonize(args) -> int:
    sources = [s for s in args.sources.split(",") if s]
    records, report = datakit.harmonize(sources)
    datakit.write_manifest(records, args.out)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"harmonized {report.n_records} records from {len(sources)} source(s) -> {args.out}")
    if report.unreadable_sources:
        for name, err in report.unreadable_sources:
            print(f"warning: unreadable source {name}: {err}", file=sys.stderr)
    return 0


def _cmd_split(args, cfg: AppConfig) -> int:
    records = _read_manifest_checked(args.manifest)
    if args.group_by_image:
        assignment = _split_grouped(records, cfg.seed)
    else:
        assignment = datakit.split(records, cfg.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (
        ("train", assignment.train),
        ("val", assignment.val),
        ("test", assignment.test),
    ):
        datakit.write_manifest(part, out_dir / f"{name}.jsonl")
    print(
        f"split {len(records)} records with seed {assignment.seed}: "
        f"train={len(assignment.train)} val={len(assignment.val)} test={len(assignment.test)}"
    )
    return 0


def _split_grouped(records: Sequence[HarmonizedRecord], seed: int):
    """Split whole images, then expand back to records (leakage-safe mode)."""
    by_image: Dict[str, List[HarmonizedRecord]] = defaultdict(list)
    for record in records:
        by_image[record.image_path].append(record)
    images = list(by_image)
    parts = datakit.split_indices(len(images), seed)
    buckets = [[], [], []]
    for bucket, indices in zip(buckets, parts):
        for i in indices:
            bucket.extend(by_image[images[i]])
    return datakit.SplitAssignment(
        train=buckets[0], val=buckets[1], test=buckets[2], seed=seed
    )


def _cmd_run(args, cfg: AppConfig) -> int:
    pipe_cfg = cfg.pipeline_config()  # validates thresholds/sizes up front
    detector, classifier = _load_sessions(cfg)
    frames = _load_frames(_resolve_inputs(args.input))
    results, bench = pipeline.run_batch(
        frames, detector, classifier, pipe_cfg, jobs=cfg.jobs
    )
    out_dir = Path(args.out)
    (out_dir / "annotated").mkdir(parents=True, exist_ok=True)
    with open(out_dir / "verdicts.jsonl", "w", encoding="utf-8") as fh:
        for i, result in enumerate(results):
            png_rel = f"annotated/{i:05d}_{Path(result.frame_id).stem}.png"
            imgio.save_png(result.annotated, out_dir / png_rel)
            fh.write(json.dumps(result.verdicts_dict(png_rel), sort_keys=True) + "\n")
    with open(out_dir / "bench.json", "w", encoding="utf-8") as fh:
        json.dump(bench.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    n_verdicts = sum(len(r.verdicts) for r in results)
    print(
        f"processed {bench.n_samples} frame(s), {n_verdicts} verdict(s); "
        f"mean {bench.mean_ms:.2f} ms/frame -> {out_dir}"
    )
    if bench.failures:
        for frame_id, err in bench.failures:
            print(f"warning: frame {frame_id} failed: {err}", file=sys.stderr)
    return 0


def _cmd_bench(args, cfg: AppConfig) -> int:
    pipe_cfg = cfg.pipeline_config()
    detector, classifier = _load_sessions(cfg)
    frames = _load_frames(_resolve_inputs(args.input))
    if args.repeat > 1:
        frames = [
            (f"{fid}#r{r}", img) for r in range(args.repeat) for fid, img in frames
        ]
    _, bench = pipeline.run_batch(
        frames, detector, classifier, pipe_cfg, jobs=cfg.jobs
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(bench.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    per_roi = f"{bench.mean_ms_per_roi:.2f}" if bench.mean_ms_per_roi is not None else "n/a"
    print(
        f"{bench.n_samples} samples: mean {bench.mean_ms:.2f} ms/frame "
        f"(p50 {bench.p50_ms:.2f}, p95 {bench.p95_ms:.2f}); {per_roi} ms/ROI"
    )
    return 0


def _cmd_eval(args) -> int:
    truth = _read_manifest_checked(args.truth)
    predictions = _read_verdicts(args.pred)
    pairs = _match_pairs(truth, predictions, args.match_iou)
    report = evalkit.classification_report(pairs)
    counts = evalkit.confusion_from_pairs(pairs)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write(evalkit.confusion_csv(counts) + "\n")
    print(report.render())
    return 0


def _cmd_ablate_label(args) -> int:
    records = _read_manifest_checked(args.manifest)
    by_image: Dict[str, List[HarmonizedRecord]] = defaultdict(list)
    for record in records:
        by_image[record.image_path].append(record)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for image_path in by_image:
            label = evalkit.ablation_label(by_image[image_path])
            out.write(
                json.dumps(
                    {"image_path": image_path, "label_id": label.id, "label_name": label.name},
                    sort_keys=True,
                )
                + "\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_report(args) -> int:
    frames = _read_verdict_frames(args.verdicts)
    try:
        with open(args.seats, "r", encoding="utf-8") as fh:
            seat_map = delivery.SeatMap.from_json(json.load(fh))
    except FileNotFoundError:
        raise DataError(f"seat map not found: {args.seats}")
    except (ValueError, KeyError) as exc:
        raise DataError(f"bad seat map {args.seats}: {exc}")
    outcomes, unassigned = delivery.aggregate(frames, seat_map, flag_count=args.flag_count)
    written = delivery.emit_reports(outcomes, args.outbox, seat_map.contacts())
    flagged = sum(1 for o in outcomes if o.decision == "flagged")
    print(
        f"wrote {written} report(s) to {args.outbox}; {flagged} flagged; "
        f"{unassigned.n_verdicts} verdict(s) unassigned"
    )
    return 0


# --- shared helpers ------------------------------------------------------------


def _load_sessions(cfg: AppConfig):
    for flag, value in (("--detector", cfg.detector_path), ("--classifier", cfg.classifier_path)):
        if not value:
            raise UsageError(f"missing required flag {flag} (or config value)")
    try:
        return load_model(cfg.detector_path), load_model(cfg.classifier_path)
    except FileNotFoundError as exc:
        raise ModelError(f"model file not found: {exc.filename or exc}") from exc


def _resolve_inputs(spec: str) -> List[Path]:
    path = Path(spec)
    if path.is_dir():
        images = [p for p in sorted(path.iterdir()) if p.suffix.lower() in IMAGE_EXTENSIONS]
        if not images:
            raise DataError(f"directory {spec} contains no images")
        return images
    if not path.is_file():
        raise DataError(f"input not found: {spec}")
    if path.suffix.lower() == ".jsonl":
        seen: Dict[str, None] = {}
        for record in datakit.read_manifest(path):
            seen.setdefault(record.image_path)
        if not seen:
            raise DataError(f"manifest {spec} lists no images")
        return [Path(p) for p in seen]
    return [path]


def _load_frames(paths: Sequence[Path]):
    frames = []
    for path in paths:
        try:
            frames.append((str(path), imgio.load_image(path)))
        except FileNotFoundError:
            raise DataError(f"image not found: {path}")
        except OSError as exc:
            raise DataError(f"cannot decode image {path}: {exc}")
    return frames


def _read_manifest_checked(path) -> List[HarmonizedRecord]:
    try:
        records = datakit.read_manifest(path)
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}")
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"bad manifest {path}: {exc}")
    if not records:
        raise DataError(f"manifest {path} is empty")
    return records


def _read_verdicts(path) -> Dict[str, List[dict]]:
    """Verdict rows from `run`, keyed by frame_id."""
    frames: Dict[str, List[dict]] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                frames[row["frame_id"]] = row.get("verdicts", [])
    except FileNotFoundError:
        raise DataError(f"verdicts file not found: {path}")
    except (json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"bad verdicts file {path}: {exc}")
    return frames


class _VerdictFrame:
    """Minimal stand-in for FrameResult when re-reading verdict files."""

    def __init__(self, frame_id, verdicts):
        self.frame_id = frame_id
        self.verdicts = verdicts


def _read_verdict_frames(path) -> List[_VerdictFrame]:
    from .classify import BehaviorVerdict

    frames = []
    for frame_id, rows in _read_verdicts(path).items():
        verdicts = [
            BehaviorVerdict(
                label=ClassLabel.from_id(int(r["label_id"])),
                prob_cheating=float(r["prob_cheating"]),
                prob_not_cheating=float(r["prob_not_cheating"]),
                bbox=BBox(*[float(v) for v in r["bbox"]]),
            )
            for r in rows
        ]
        frames.append(_VerdictFrame(frame_id, verdicts))
    return frames


def _match_pairs(
    truth: Sequence[HarmonizedRecord],
    predictions: Dict[str, List[dict]],
    match_iou: float,
) -> List[EvalPair]:
    """Pair truth boxes with predicted verdicts by greedy IoU per image.

    A truth box with no matching prediction counts as predicted
    not_cheating: the system raised no flag for that person.
    """
    pred_by_image: Dict[str, List[dict]] = {k: list(v) for k, v in predictions.items()}
    pairs: List[EvalPair] = []
    for record in truth:
        candidates = pred_by_image.get(record.image_path, [])
        best_i, best_overlap = -1, 0.0
        for i, row in enumerate(candidates):
            box = BBox(*[float(v) for v in row["bbox"]])
            overlap = iou(record.bbox, box)
            if overlap > best_overlap:
                best_i, best_overlap = i, overlap
        if best_i >= 0 and best_overlap >= match_iou:
            row = candidates.pop(best_i)
            predicted = ClassLabel.from_id(int(row["label_id"]))
        else:
            predicted = NOT_CHEATING
        pairs.append(EvalPair(truth=record.label, predicted=predicted, frame_id=record.image_path))
    return pairs


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        if args.command == "harmonize":
            return _cmd_harmonize(args)
        if args.command == "split":
            return _cmd_split(args, resolve_config(args))
        if args.command == "run":
            return _cmd_run(args, resolve_config(args))
        if args.command == "bench":
            return _cmd_bench(args, resolve_config(args))
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "ablate-label":
            return _cmd_ablate_label(args)
        if args.command == "report":
            return _cmd_report(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, FileNotFoundError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except ProctorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
