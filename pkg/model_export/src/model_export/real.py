"""Real pretrained exports (network-dependent).

These need the optional `real` extras (torch, timm, ultralytics) plus
internet access to fetch pretrained weights, so they are never exercised
in CI; the toy models stand in for them there. Output-class index order
for the classifier head is fixed as 0 = not_cheating, 1 = cheating.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Dict


class DownloadFailure(RuntimeError):
    """Pretrained weights could not be fetched."""


class ExportFailure(RuntimeError):
    """The graph export step itself failed."""


class ExporterUsageError(ValueError):
    """Bad arguments to an export entry point."""


def _manifest(path: Path, model_name: str, input_name, input_shape, output_name, output_shape) -> Dict:
    data = path.read_bytes()
    manifest = {
        "model_name": model_name,
        "file": path.name,
        "input_name": input_name,
        "input_shape": list(input_shape),
        "output_name": output_name,
        "output_shape": list(output_shape),
        "checksum": "sha256:" + hashlib.sha256(data).hexdigest(),
    }
    path.with_suffix(".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return manifest


def anchor_count(size: int) -> int:
    """Anchors emitted by the detector head at a given square input size
    (one cell per 8/16/32-stride grid position)."""
    return (size // 8) ** 2 + (size // 16) ** 2 + (size // 32) ** 2


def export_detector(out: str, size: int = 640) -> Dict:
    """Export the pretrained nano detector to ONNX.

    Raw output layout is [1, 84, A] with A = anchor_count(size).
    """
    if size % 32 != 0:
        raise ExporterUsageError(f"detector input size must be a multiple of 32, got {size}")
    try:
        from ultralytics import YOLO
    except ImportError as exc:
        raise ExportFailure(
            "ultralytics is required for real detector exports; "
            "install the 'real' extras"
        ) from exc
    try:
        model = YOLO("yolov8n.pt")  # downloads on first use
    except Exception as exc:
        raise DownloadFailure(f"could not obtain pretrained detector weights: {exc}") from exc
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        exported = model.export(format="onnx", imgsz=size, opset=13, simplify=False)
        Path(exported).replace(out_path)
    except Exception as exc:
        raise ExportFailure(f"detector export failed: {exc}") from exc
    return _manifest(
        out_path,
        "yolov8n",
        "images",
        (1, 3, size, size),
        "output0",
        (1, 84, anchor_count(size)),
    )


def export_classifier(out: str, classes: int = 2, seed: int = 2024) -> Dict:
    """Export the behavior classifier backbone with a fresh 2-logit head.

    The head is seeded so repeated exports produce identical logits for a
    fixed input; fine-tuned weights can be loaded before export via the
    training script.
    """
    if classes != 2:
        raise ExporterUsageError(f"the behavior head is binary; got classes={classes}")
    try:
        import timm
        import torch
    except ImportError as exc:
        raise ExportFailure(
            "torch and timm are required for real classifier exports; "
            "install the 'real' extras"
        ) from exc
    try:
        torch.manual_seed(seed)
        model = timm.create_model("rexnet_150", pretrained=True, num_classes=classes)
    except Exception as exc:
        raise DownloadFailure(f"could not obtain pretrained backbone weights: {exc}") from exc
    model.eval()
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        dummy = torch.zeros(1, 3, 224, 224)
        torch.onnx.export(
            model,
            dummy,
            str(out_path),
            input_names=["input"],
            output_names=["logits"],
            opset_version=13,
        )
    except Exception as exc:
        raise ExportFailure(f"classifier export failed: {exc}") from exc
    return _manifest(
        out_path, "rexnet_150", "input", (1, 3, 224, 224), "logits", (1, classes)
    )
