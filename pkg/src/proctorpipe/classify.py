"""Stage 2: per-person ROI preparation and behavior classification.

Each person box is cropped from the original frame, stretched to
224x224, normalized with ImageNet channel statistics (the classifier is
initialized from ImageNet weights, so those are its expected input
statistics), and pushed through the 2-logit behavior model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import cv2
import numpy as np

from .errors import EmptyAfterClamp, ShapeMismatch
from .runtime import ModelSession, run_inference
from .types import BBox, CHEATING, NOT_CHEATING, ClassLabel, ImageBuffer

ROI_SIZE = 224
ROI_SHAPE = (1, 3, ROI_SIZE, ROI_SIZE)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-channel (v/255 - mean) / std normalization constants."""

    mean: Tuple[float, float, float] = (0.485, 0.456, 0.406)
    std: Tuple[float, float, float] = (0.229, 0.224, 0.225)

    def __post_init__(self):
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ValueError("mean and std must each have 3 components")
        if any(s <= 0 for s in self.std):
            raise ValueError(f"std components must be positive, got {self.std}")


IMAGENET_NORM = NormalizationSpec()


@dataclass(frozen=True)
class BehaviorVerdict:
    """Binary verdict for one person box, with class probabilities."""

    label: ClassLabel
    prob_cheating: float
    prob_not_cheating: float
    bbox: BBox

    def __post_init__(self):
        if abs(self.prob_cheating + self.prob_not_cheating - 1.0) > 1e-6:
            raise ValueError("class probabilities must sum to 1")


def crop(img: ImageBuffer, box: BBox) -> ImageBuffer:
    """Extract the sub-image under box, clamped to image bounds.

    Raises EmptyAfterClamp when the box lies entirely outside the image
    (or covers less than one pixel after rounding).
    """
    clamped = box.clamped(img.width, img.height)
    if clamped is None:
        raise EmptyAfterClamp(f"box {box.as_tuple()} outside {img.width}x{img.height} image")
    x1 = int(round(clamped.x1))
    y1 = int(round(clamped.y1))
    x2 = int(round(clamped.x2))
    y2 = int(round(clamped.y2))
    if x2 <= x1 or y2 <= y1:
        raise EmptyAfterClamp(f"box {box.as_tuple()} rounds to zero pixels")
    return ImageBuffer(img.pixels[y1:y2, x1:x2].copy())


def expand_box(box: BBox, factor: float, img_w: int, img_h: int) -> BBox:
    """Grow a box by factor * side on each edge, clamped to the image."""
    if factor <= 0:
        return box
    dx = box.width * factor
    dy = box.height * factor
    grown = BBox(box.x1 - dx, box.y1 - dy, box.x2 + dx, box.y2 + dy)
    clamped = grown.clamped(img_w, img_h)
    return clamped if clamped is not None else box


def preprocess_roi(roi: ImageBuffer, spec: NormalizationSpec = IMAGENET_NORM) -> np.ndarray:
    """Stretch to 224x224 (bilinear, no aspect preservation) and normalize.

    Returns a float32 tensor of shape [1, 3, 224, 224], channel order RGB.
    """
    resized = cv2.resize(roi.pixels, (ROI_SIZE, ROI_SIZE), interpolation=cv2.INTER_LINEAR)
    scaled = resized.astype(np.float32) / 255.0
    mean = np.asarray(spec.mean, dtype=np.float32)
    std = np.asarray(spec.std, dtype=np.float32)
    normalized = (scaled - mean) / std
    return normalized.transpose(2, 0, 1)[np.newaxis, ...].astype(np.float32)


def softmax2(logit_not: float, logit_cheat: float) -> Tuple[float, float]:
    """Numerically stable two-class softmax."""
    m = max(logit_not, logit_cheat)
    e0 = math.exp(logit_not - m)
    e1 = math.exp(logit_cheat - m)
    total = e0 + e1
    return e0 / total, e1 / total


def classify(
    roi: np.ndarray,
    session: ModelSession,
    threshold: float = 0.5,
    bbox: BBox = None,
) -> BehaviorVerdict:
    """Run the behavior classifier on one prepared ROI tensor.

    The verdict is cheating iff prob_cheating >= threshold; a tie at
    exactly the threshold resolves to cheating (the conservative choice
    for a security screen). Logit index order is 0 = not_cheating,
    1 = cheating.
    """
    roi = np.asarray(roi, dtype=np.float32)
    if roi.shape != ROI_SHAPE:
        raise ShapeMismatch(f"ROI tensor must be {ROI_SHAPE}, got {tuple(roi.shape)}")
    outputs = run_inference(session, {session.input_name: roi})
    logits = np.asarray(outputs[session.output_name]).reshape(-1)
    if logits.shape != (2,):
        raise ShapeMismatch(f"classifier must emit 2 logits, got shape {tuple(logits.shape)}")
    p_not, p_cheat = softmax2(float(logits[0]), float(logits[1]))
    label = CHEATING if p_cheat >= threshold else NOT_CHEATING
    if bbox is None:
        bbox = BBox(0.0, 0.0, float(ROI_SIZE), float(ROI_SIZE))
    return BehaviorVerdict(
        label=label, prob_cheating=p_cheat, prob_not_cheating=p_not, bbox=bbox
    )
