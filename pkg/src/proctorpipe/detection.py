"""Stage 1: detector preprocessing and output postprocessing.

Covers letterboxing to the fixed square detector input, decoding the raw
[1, 4+C, A] head tensor, confidence thresholding, per-class greedy NMS,
person filtering, and back-mapping boxes into the original pixel frame.
All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import cv2
import numpy as np

from .errors import ShapeMismatch
from .types import BBox, Detection, ImageBuffer, iou

# COCO vocabulary size and padding gray used by the detector family's
# stock preprocessing; keeping them identical preserves pretrained accuracy.
NUM_CLASSES = 80
PAD_VALUE = 114

COCO_NAMES = {0: "person", 56: "chair", 62: "tv", 63: "laptop", 67: "cell phone"}


@dataclass(frozen=True)
class DetectorConfig:
    conf_threshold: float = 0.25
    iou_threshold: float = 0.45
    person_class_id: int = 0
    input_size: int = 640

    def __post_init__(self):
        if not 0.0 < self.conf_threshold < 1.0:
            raise ValueError(f"conf_threshold must be in (0, 1), got {self.conf_threshold}")
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1), got {self.iou_threshold}")
        if self.input_size < 32:
            raise ValueError(f"input_size must be >= 32, got {self.input_size}")


@dataclass(frozen=True)
class LetterboxParams:
    """Forward mapping original -> letterbox frame: p' = p * scale + pad."""

    scale: float
    pad_left: int
    pad_top: int
    target_w: int
    target_h: int

    def to_letterbox(self, x: float, y: float) -> Tuple[float, float]:
        return x * self.scale + self.pad_left, y * self.scale + self.pad_top

    def to_original(self, x: float, y: float) -> Tuple[float, float]:
        return (x - self.pad_left) / self.scale, (y - self.pad_top) / self.scale


def letterbox(img: ImageBuffer, target: int) -> Tuple[ImageBuffer, LetterboxParams]:
    """Aspect-preserving resize onto a target x target gray canvas.

    Odd padding remainders go to the right/bottom edge.
    """
    if target < 32:
        raise ValueError(f"target must be >= 32, got {target}")
    w, h = img.width, img.height
    scale = min(target / w, target / h)
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    pad_left = (target - new_w) // 2
    pad_top = (target - new_h) // 2
    if (new_w, new_h) == (w, h):
        content = img.pixels
    else:
        content = cv2.resize(img.pixels, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
    canvas = np.full((target, target, 3), PAD_VALUE, dtype=np.uint8)
    canvas[pad_top : pad_top + new_h, pad_left : pad_left + new_w] = content
    params = LetterboxParams(
        scale=scale, pad_left=pad_left, pad_top=pad_top, target_w=target, target_h=target
    )
    return ImageBuffer(canvas), params


def decode_detector_output(
    raw: np.ndarray,
    params: LetterboxParams,
    cfg: DetectorConfig,
    orig_w: int,
    orig_h: int,
) -> List[Detection]:
    """Decode a raw [1, 4+C, A] head tensor into thresholded detections.

    Rows 0..3 are per-anchor center-x, center-y, width, height in the
    letterbox frame; the remaining C rows are class scores. Detections
    keep the arg-max class, are converted to corner form, mapped back to
    original pixel coordinates, and clamped to the image. Boxes thinner
    than one pixel after clamping carry no croppable content and are
    dropped.
    """
    raw = np.asarray(raw)
    if raw.ndim != 3 or raw.shape[0] != 1 or raw.shape[1] != 4 + NUM_CLASSES:
        raise ShapeMismatch(
            f"raw detector output must be [1, {4 + NUM_CLASSES}, A], got {tuple(raw.shape)}"
        )
    grid = raw[0]
    boxes = grid[:4, :]
    scores = grid[4:, :]
    class_ids = np.argmax(scores, axis=0)
    best = scores[class_ids, np.arange(scores.shape[1])]

    detections: List[Detection] = []
    for a in np.nonzero(best >= cfg.conf_threshold)[0]:
        cx, cy, w, h = (float(boxes[i, a]) for i in range(4))
        x1, y1 = params.to_original(cx - w / 2.0, cy - h / 2.0)
        x2, y2 = params.to_original(cx + w / 2.0, cy + h / 2.0)
        x1, x2 = max(x1, 0.0), min(x2, float(orig_w))
        y1, y2 = max(y1, 0.0), min(y2, float(orig_h))
        if x2 - x1 < 1.0 or y2 - y1 < 1.0:
            continue
        cid = int(class_ids[a])
        detections.append(
            Detection(
                bbox=BBox(x1, y1, x2, y2),
                class_id=cid,
                class_name=COCO_NAMES.get(cid, f"class_{cid}"),
                score=float(best[a]),
            )
        )
    return detections


def nms(dets: List[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy per-class suppression, output sorted by descending score.

    Score ties keep input order, so the result is fully deterministic.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept: List[Detection] = []
    for i in order:
        d = dets[i]
        if any(k.class_id == d.class_id and iou(k.bbox, d.bbox) > iou_threshold for k in kept):
            continue
        kept.append(d)
    return kept


def filter_person(dets: List[Detection], cfg: DetectorConfig) -> List[BBox]:
    """Keep only person-class boxes, preserving order."""
    return [d.bbox for d in dets if d.class_id == cfg.person_class_id]
