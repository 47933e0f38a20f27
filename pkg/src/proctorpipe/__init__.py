"""proctorpipe: two-stage exam-room monitoring toolkit.

Stage 1 localizes people in exam-room frames; Stage 2 classifies each
cropped person as cheating / not_cheating. The package also ships the
dataset harmonization, evaluation, latency benchmarking, and private
report-delivery machinery around that pipeline.
"""

from .classify import (
    IMAGENET_NORM,
    BehaviorVerdict,
    NormalizationSpec,
    classify,
    crop,
    preprocess_roi,
)
from .datakit import (
    HarmonizedRecord,
    IngestReport,
    SourceAnnotation,
    SplitAssignment,
    harmonize,
    map_label,
    read_manifest,
    split,
    validate_bbox,
    write_manifest,
)
from .detection import (
    DetectorConfig,
    LetterboxParams,
    decode_detector_output,
    filter_person,
    letterbox,
    nms,
)
from .delivery import (
    SeatEntry,
    SeatMap,
    StudentOutcome,
    aggregate,
    assign_to_seat,
    emit_reports,
)
from .evalkit import (
    ConfusionCounts,
    EvalPair,
    MetricsReport,
    ablation_label,
    accuracy,
    classification_report,
    confusion_from_pairs,
    f1,
    precision,
    recall,
)
from .pipeline import (
    BenchReport,
    FrameResult,
    PipelineConfig,
    StageTimings,
    annotate,
    process_frame,
    run_batch,
)
from .runtime import ModelSession, load_model, run_inference
from .types import BBox, CHEATING, NOT_CHEATING, ClassLabel, Detection, ImageBuffer, iou

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BehaviorVerdict",
    "BenchReport",
    "CHEATING",
    "ClassLabel",
    "ConfusionCounts",
    "Detection",
    "DetectorConfig",
    "EvalPair",
    "FrameResult",
    "HarmonizedRecord",
    "IMAGENET_NORM",
    "ImageBuffer",
    "IngestReport",
    "LetterboxParams",
    "MetricsReport",
    "ModelSession",
    "NOT_CHEATING",
    "NormalizationSpec",
    "PipelineConfig",
    "SeatEntry",
    "SeatMap",
    "SourceAnnotation",
    "SplitAssignment",
    "StageTimings",
    "StudentOutcome",
    "ablation_label",
    "accuracy",
    "aggregate",
    "annotate",
    "assign_to_seat",
    "classification_report",
    "classify",
    "confusion_from_pairs",
    "crop",
    "decode_detector_output",
    "emit_reports",
    "f1",
    "filter_person",
    "harmonize",
    "iou",
    "letterbox",
    "load_model",
    "map_label",
    "nms",
    "precision",
    "preprocess_roi",
    "process_frame",
    "read_manifest",
    "recall",
    "run_batch",
    "run_inference",
    "split",
    "validate_bbox",
    "write_manifest",
]
