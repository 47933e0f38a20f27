"""Image file loading and saving."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .types import ImageBuffer


def load_image(path) -> ImageBuffer:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return ImageBuffer(np.asarray(rgb, dtype=np.uint8))


def save_png(img: ImageBuffer, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img.pixels).save(path, format="PNG")
