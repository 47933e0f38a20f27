"""Core value types shared by every stage of the pipeline.

All types here are immutable and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """An 8-bit RGB raster, stored row-major as an (H, W, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"image must be (H, W, 3), got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {px.dtype}")
        # Freeze the backing storage so shared buffers stay immutable.
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3

    def same_pixels(self, other: "ImageBuffer") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in original-image pixel coordinates, corners (x1,y1)-(x2,y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise ValueError(
                f"box must have strictly positive area, got "
                f"({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def clamped(self, img_w: float, img_h: float) -> Optional["BBox"]:
        """Intersect with the image rectangle; None if nothing remains."""
        x1 = min(max(self.x1, 0.0), float(img_w))
        y1 = min(max(self.y1, 0.0), float(img_h))
        x2 = min(max(self.x2, 0.0), float(img_w))
        y2 = min(max(self.y2, 0.0), float(img_h))
        if x2 <= x1 or y2 <= y1:
            return None
        return BBox(x1, y1, x2, y2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Symmetric by construction: every term is commutative in its operands.
    """
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


@dataclass(frozen=True)
class Detection:
    """A scored, class-labeled box emitted by the detector."""

    bbox: BBox
    class_id: int
    class_name: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


_LABEL_NAMES = {0: "not_cheating", 1: "cheating"}


@dataclass(frozen=True)
class ClassLabel:
    """Binary behavior label: 0 = not_cheating, 1 = cheating."""

    id: int
    name: str = field(default="")

    def __post_init__(self):
        if self.id not in _LABEL_NAMES:
            raise ValueError(f"label id must be 0 or 1, got {self.id}")
        expected = _LABEL_NAMES[self.id]
        if self.name == "":
            object.__setattr__(self, "name", expected)
        elif self.name != expected:
            raise ValueError(f"label id {self.id} must be named {expected!r}, got {self.name!r}")

    @classmethod
    def from_id(cls, label_id: int) -> "ClassLabel":
        return cls(int(label_id))

    @classmethod
    def from_name(cls, name: str) -> "ClassLabel":
        for label_id, label_name in _LABEL_NAMES.items():
            if name == label_name:
                return cls(label_id)
        raise ValueError(f"unknown label name: {name!r}")


NOT_CHEATING = ClassLabel(0)
CHEATING = ClassLabel(1)
