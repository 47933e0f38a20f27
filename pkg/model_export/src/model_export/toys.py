"""Tiny deterministic toy models for integration tests.

Both graphs are fabricated from fixed constants, so regeneration always
produces byte-identical files. Each manifest records the model's exact
closed-form behavior; consumers read their expectations from the
manifest instead of hard-coding them.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .onnx_writer import Node, build_model

DETECTOR_INPUT = (1, 3, 640, 640)
DETECTOR_OUTPUT = (1, 84, 4)
CLASSIFIER_INPUT = (1, 3, 224, 224)
CLASSIFIER_OUTPUT = (1, 2)

CLASSIFIER_GAIN = 4.0

# Constant anchor table: two confident persons, one sub-threshold person,
# one non-person class. Coordinates are in the detector's letterbox frame.
TOY_ANCHORS = [
    {"cx": 200.0, "cy": 180.0, "w": 80.0, "h": 160.0, "class_id": 0, "score": 0.90},
    {"cx": 420.0, "cy": 300.0, "w": 100.0, "h": 200.0, "class_id": 0, "score": 0.85},
    {"cx": 320.0, "cy": 500.0, "w": 64.0, "h": 64.0, "class_id": 0, "score": 0.20},
    {"cx": 320.0, "cy": 320.0, "w": 120.0, "h": 120.0, "class_id": 56, "score": 0.80},
]


def _anchor_tensor() -> np.ndarray:
    grid = np.zeros(DETECTOR_OUTPUT, dtype=np.float32)
    for a, anchor in enumerate(TOY_ANCHORS):
        grid[0, 0, a] = anchor["cx"]
        grid[0, 1, a] = anchor["cy"]
        grid[0, 2, a] = anchor["w"]
        grid[0, 3, a] = anchor["h"]
        grid[0, 4 + anchor["class_id"], a] = anchor["score"]
    return grid


def build_toy_detector() -> bytes:
    """Constant-output detector: the input is consumed (mean * 0) so the
    graph exercises real dataflow, but the anchors never change."""
    nodes = [
        Node("ReduceMean", ["images"], ["mean_all"], name="consume_input", attrs={"keepdims": 0}),
        Node("Mul", ["mean_all", "zero"], ["zeroed"], name="null_out"),
        Node("Add", ["zeroed", "anchors"], ["output0"], name="emit_anchors"),
    ]
    return build_model(
        "toy_detector",
        nodes,
        inputs=[("images", DETECTOR_INPUT)],
        outputs=[("output0", DETECTOR_OUTPUT)],
        initializers=[
            ("zero", np.float32(0.0).reshape(())),
            ("anchors", _anchor_tensor()),
        ],
    )


def build_toy_classifier() -> bytes:
    """Mean-intensity classifier: logits = [-gain*m, gain*m] where m is
    the mean over all input elements. Positive normalized mean means the
    cheating logit wins."""
    weights = np.asarray([[-CLASSIFIER_GAIN, CLASSIFIER_GAIN]], dtype=np.float32)
    bias = np.zeros(2, dtype=np.float32)
    nodes = [
        Node("ReduceMean", ["input"], ["mean_all"], name="pool_mean", attrs={"keepdims": 0}),
        Node("Reshape", ["mean_all", "row_shape"], ["mean_row"], name="to_row"),
        Node("MatMul", ["mean_row", "head_weight"], ["scaled"], name="head"),
        Node("Add", ["scaled", "head_bias"], ["logits"], name="bias"),
    ]
    return build_model(
        "toy_classifier",
        nodes,
        inputs=[("input", CLASSIFIER_INPUT)],
        outputs=[("logits", CLASSIFIER_OUTPUT)],
        initializers=[
            ("row_shape", np.asarray([1, 1], dtype=np.int64)),
            ("head_weight", weights),
            ("head_bias", bias),
        ],
    )


def _person_boxes() -> list:
    boxes = []
    for anchor in TOY_ANCHORS:
        if anchor["class_id"] != 0 or anchor["score"] < 0.25:
            continue
        boxes.append(
            [
                anchor["cx"] - anchor["w"] / 2,
                anchor["cy"] - anchor["h"] / 2,
                anchor["cx"] + anchor["w"] / 2,
                anchor["cy"] + anchor["h"] / 2,
            ]
        )
    return boxes


def _sha256(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _write(path: Path, data: bytes, manifest: Dict) -> Dict:
    path.write_bytes(data)
    manifest = dict(manifest, checksum=_sha256(data))
    manifest_path = path.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def make_toy_models(out_dir) -> Tuple[Dict, Dict]:
    """Write both toy graphs plus manifests; returns the two manifests."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    detector_bytes = build_toy_detector()
    detector_manifest = _write(
        out_dir / "toy_detector.onnx",
        detector_bytes,
        {
            "model_name": "toy-detector",
            "file": "toy_detector.onnx",
            "input_name": "images",
            "input_shape": list(DETECTOR_INPUT),
            "output_name": "output0",
            "output_shape": list(DETECTOR_OUTPUT),
            "behavior": {
                "kind": "constant_anchors",
                "anchors": TOY_ANCHORS,
                "person_boxes_letterbox_xyxy": _person_boxes(),
                "person_scores": [
                    a["score"]
                    for a in TOY_ANCHORS
                    if a["class_id"] == 0 and a["score"] >= 0.25
                ],
                "note": (
                    "output is constant for every input; person boxes are in the "
                    "letterbox frame, which equals the original frame for square "
                    "inputs at the native 640 size"
                ),
            },
        },
    )

    classifier_bytes = build_toy_classifier()
    classifier_manifest = _write(
        out_dir / "toy_classifier.onnx",
        classifier_bytes,
        {
            "model_name": "toy-classifier",
            "file": "toy_classifier.onnx",
            "input_name": "input",
            "input_shape": list(CLASSIFIER_INPUT),
            "output_name": "logits",
            "output_shape": list(CLASSIFIER_OUTPUT),
            "behavior": {
                "kind": "mean_gain",
                "gain": CLASSIFIER_GAIN,
                "rule": "logits = [-gain*m, gain*m] with m = mean over all input elements",
                "prob_cheating": "sigmoid(2*gain*m)",
            },
        },
    )
    return detector_manifest, classifier_manifest
