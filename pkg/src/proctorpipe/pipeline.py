"""End-to-end per-frame orchestration: detect, crop, classify, annotate.

Also owns the latency instrumentation. The benchmark clock wraps model
execution and tensor preparation only; image file decode and annotation
rendering are excluded so the per-sample figures stay comparable across
storage and drawing choices.
"""

from __future__ import annotations

import queue
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .classify import (
    IMAGENET_NORM,
    BehaviorVerdict,
    NormalizationSpec,
    classify,
    crop,
    expand_box,
    preprocess_roi,
)
from .detection import (
    DetectorConfig,
    decode_detector_output,
    filter_person,
    letterbox,
    nms,
)
from .errors import EmptyManifest, RuntimeFailure
from .runtime import ModelSession, load_model, run_inference
from .types import ImageBuffer

Clock = Callable[[], float]

CHEATING_COLOR = (255, 0, 0)
NOT_CHEATING_COLOR = (0, 255, 0)


@dataclass(frozen=True)
class PipelineConfig:
    detector: DetectorConfig = DetectorConfig()
    norm: NormalizationSpec = IMAGENET_NORM
    cls_threshold: float = 0.5
    roi_expand: float = 0.0


@dataclass(frozen=True)
class StageTimings:
    detect_ms: float
    preprocess_ms: float
    classify_ms: float
    total_ms: float


@dataclass(frozen=True)
class FrameResult:
    frame_id: str
    verdicts: List[BehaviorVerdict]
    annotated: ImageBuffer
    timings: StageTimings

    def verdicts_dict(self, annotated_path: str = "") -> Dict:
        """JSON-safe view of the verdicts. Timings are deliberately not
        serialized here so output files are byte-stable across runs."""
        return {
            "frame_id": self.frame_id,
            "annotated": annotated_path,
            "verdicts": [
                {
                    "label_id": v.label.id,
                    "label_name": v.label.name,
                    "prob_cheating": round(v.prob_cheating, 6),
                    "prob_not_cheating": round(v.prob_not_cheating, 6),
                    "bbox": [v.bbox.x1, v.bbox.y1, v.bbox.x2, v.bbox.y2],
                }
                for v in self.verdicts
            ],
        }


@dataclass(frozen=True)
class BenchReport:
    n_samples: int
    mean_ms: float
    p50_ms: float
    p95_ms: float
    min_ms: float
    max_ms: float
    per_stage_means: Dict[str, float]
    n_rois: int
    mean_ms_per_roi: Optional[float]
    failures: List[Tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "n_samples": self.n_samples,
            "mean_ms": self.mean_ms,
            "p50_ms": self.p50_ms,
            "p95_ms": self.p95_ms,
            "min_ms": self.min_ms,
            "max_ms": self.max_ms,
            "per_stage_means": dict(self.per_stage_means),
            "n_rois": self.n_rois,
            "mean_ms_per_roi": self.mean_ms_per_roi,
            "failures": [{"frame_id": f, "error": e} for f, e in self.failures],
        }


def percentile(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics, q in [0, 100]."""
    if not sorted_values:
        raise ValueError("no samples")
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    rank = (q / 100.0) * (n - 1)
    lo = int(rank)
    hi = min(lo + 1, n - 1)
    frac = rank - lo
    return float(sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac)


def build_bench_report(
    timings: Sequence[StageTimings],
    n_rois: int,
    failures: Sequence[Tuple[str, str]] = (),
) -> BenchReport:
    if not timings:
        raise EmptyManifest("no frames were timed")
    totals = sorted(t.total_ms for t in timings)
    n = len(timings)
    total_sum = sum(t.total_ms for t in timings)
    return BenchReport(
        n_samples=n,
        mean_ms=total_sum / n,
        p50_ms=percentile(totals, 50.0),
        p95_ms=percentile(totals, 95.0),
        min_ms=totals[0],
        max_ms=totals[-1],
        per_stage_means={
            "detect_ms": sum(t.detect_ms for t in timings) / n,
            "preprocess_ms": sum(t.preprocess_ms for t in timings) / n,
            "classify_ms": sum(t.classify_ms for t in timings) / n,
        },
        n_rois=n_rois,
        mean_ms_per_roi=(total_sum / n_rois) if n_rois else None,
        failures=list(failures),
    )


def _detector_tensor(lb: ImageBuffer) -> np.ndarray:
    scaled = lb.pixels.astype(np.float32) / 255.0
    return scaled.transpose(2, 0, 1)[np.newaxis, ...]


def process_frame(
    img: ImageBuffer,
    detector: ModelSession,
    classifier: ModelSession,
    cfg: PipelineConfig = PipelineConfig(),
    frame_id: str = "",
    clock: Clock = time.perf_counter,
) -> FrameResult:
    """Run both stages on one frame.

    Verdicts correspond one-to-one, in order, with the person boxes that
    survive detection. A frame with no persons yields no verdicts and an
    unmodified copy of the input. Any ROI failure fails the whole frame
    with the offending ROI identified.
    """
    t_start = clock()

    t0 = clock()
    lb_img, params = letterbox(img, cfg.detector.input_size)
    det_input = _detector_tensor(lb_img)
    preprocess_ms = (clock() - t0) * 1000.0

    t0 = clock()
    raw = run_inference(detector, {detector.input_name: det_input})
    dets = decode_detector_output(
        raw[detector.output_name], params, cfg.detector, img.width, img.height
    )
    dets = nms(dets, cfg.detector.iou_threshold)
    person_boxes = filter_person(dets, cfg.detector)
    detect_ms = (clock() - t0) * 1000.0

    verdicts: List[BehaviorVerdict] = []
    classify_ms = 0.0
    for i, box in enumerate(person_boxes):
        try:
            t0 = clock()
            roi_box = expand_box(box, cfg.roi_expand, img.width, img.height)
            roi = preprocess_roi(crop(img, roi_box), cfg.norm)
            preprocess_ms += (clock() - t0) * 1000.0

            t0 = clock()
            verdict = classify(roi, classifier, cfg.cls_threshold, bbox=box)
            classify_ms += (clock() - t0) * 1000.0
        except Exception as exc:
            raise RuntimeFailure(
                f"frame {frame_id!r}: ROI {i} at {box.as_tuple()} failed: {exc}"
            ) from exc
        verdicts.append(verdict)
    total_ms = (clock() - t_start) * 1000.0

    annotated = annotate(img, verdicts)
    return FrameResult(
        frame_id=frame_id,
        verdicts=verdicts,
        annotated=annotated,
        timings=StageTimings(
            detect_ms=detect_ms,
            preprocess_ms=preprocess_ms,
            classify_ms=classify_ms,
            total_ms=total_ms,
        ),
    )


def annotate(img: ImageBuffer, verdicts: Sequence[BehaviorVerdict]) -> ImageBuffer:
    """Draw each verdict's box and label onto a fresh copy of the frame.

    Cheating boxes are red, not_cheating green, 2 px stroke; the label
    sits above the box unless that would clip off the top edge.
    """
    canvas = Image.fromarray(img.pixels.copy())
    if not verdicts:
        return ImageBuffer(np.asarray(canvas))
    draw = ImageDraw.Draw(canvas)
    font = ImageFont.load_default()
    for v in verdicts:
        color = CHEATING_COLOR if v.label.id == 1 else NOT_CHEATING_COLOR
        x1, y1, x2, y2 = (round(c) for c in v.bbox.as_tuple())
        draw.rectangle([x1, y1, x2 - 1, y2 - 1], outline=color, width=2)
        prob = v.prob_cheating if v.label.id == 1 else v.prob_not_cheating
        text = f"{v.label.name} {prob:.2f}"
        tb = draw.textbbox((0, 0), text, font=font)
        text_h = tb[3] - tb[1]
        ty = y1 - text_h - 4
        if ty < 0:
            ty = y1 + 3
        draw.text((x1 + 2, ty), text, fill=color, font=font)
    return ImageBuffer(np.asarray(canvas))


def run_batch(
    frames: Sequence[Tuple[str, ImageBuffer]],
    detector: ModelSession,
    classifier: ModelSession,
    cfg: PipelineConfig = PipelineConfig(),
    jobs: int = 1,
    clock: Clock = time.perf_counter,
) -> Tuple[List[FrameResult], BenchReport]:
    """Process a batch of decoded frames and report latency statistics.

    Results come back in input order regardless of worker count. Frames
    that fail are skipped in the statistics and listed in the report's
    failures section.
    """
    if not frames:
        raise EmptyManifest("manifest references no frames")

    results: List[Optional[FrameResult]] = [None] * len(frames)
    failures: List[Tuple[str, str]] = []

    if jobs <= 1:
        for i, (frame_id, img) in enumerate(frames):
            try:
                results[i] = process_frame(img, detector, classifier, cfg, frame_id, clock)
            except Exception as exc:
                failures.append((frame_id, str(exc)))
    else:
        # Each worker owns a private session pair; a queue hands pairs out.
        pool: "queue.SimpleQueue[Tuple[ModelSession, ModelSession]]" = queue.SimpleQueue()
        pool.put((detector, classifier))
        for _ in range(jobs - 1):
            pool.put(
                (load_model(detector.graph_path), load_model(classifier.graph_path))
            )

        def work(item):
            i, (frame_id, img) = item
            det, cls = pool.get()
            try:
                return i, process_frame(img, det, cls, cfg, frame_id, clock), None
            except Exception as exc:
                return i, None, (frame_id, str(exc))
            finally:
                pool.put((det, cls))

        with ThreadPoolExecutor(max_workers=jobs) as executor:
            for i, result, failure in executor.map(work, enumerate(frames)):
                results[i] = result
                if failure:
                    failures.append(failure)
        failures.sort(key=lambda f: f[0])

    ok = [r for r in results if r is not None]
    if not ok:
        raise EmptyManifest(
            f"all {len(frames)} frames failed; first error: {failures[0][1]}"
        )
    report = build_bench_report(
        [r.timings for r in ok], sum(len(r.verdicts) for r in ok), failures
    )
    return ok, report
