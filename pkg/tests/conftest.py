import json
from pathlib import Path

import numpy as np
import pytest

from proctorpipe import ImageBuffer, load_model

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def toy_detector():
    return load_model(FIXTURES / "toy_detector.onnx")


@pytest.fixture(scope="session")
def toy_classifier():
    return load_model(FIXTURES / "toy_classifier.onnx")


@pytest.fixture(scope="session")
def detector_manifest():
    return json.loads((FIXTURES / "toy_detector.manifest.json").read_text())


@pytest.fixture(scope="session")
def classifier_manifest():
    return json.loads((FIXTURES / "toy_classifier.manifest.json").read_text())


def make_image(width: int, height: int, value=128, seed=None) -> ImageBuffer:
    if seed is None:
        px = np.full((height, width, 3), value, dtype=np.uint8)
    else:
        px = np.random.default_rng(seed).integers(0, 256, (height, width, 3), dtype=np.uint8)
    return ImageBuffer(px)
