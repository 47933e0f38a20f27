import importlib.util

import pytest

from model_export.__main__ import main
from model_export.real import ExporterUsageError, anchor_count, export_classifier, export_detector

HAS_DETECTOR_STACK = importlib.util.find_spec("ultralytics") is not None
HAS_CLASSIFIER_STACK = (
    importlib.util.find_spec("torch") is not None
    and importlib.util.find_spec("timm") is not None
)


class TestAnchorCount:
    def test_native_size(self):
        assert anchor_count(640) == 8400

    def test_half_size(self):
        # (320/8)^2 + (320/16)^2 + (320/32)^2
        assert anchor_count(320) == 2100


class TestUsageValidation:
    def test_detector_size_must_be_multiple_of_32(self, tmp_path):
        with pytest.raises(ExporterUsageError):
            export_detector(str(tmp_path / "d.onnx"), size=300)

    def test_classifier_rejects_non_binary_head(self, tmp_path):
        with pytest.raises(ExporterUsageError):
            export_classifier(str(tmp_path / "c.onnx"), classes=3)

    def test_cli_maps_usage_error_to_exit_1(self, tmp_path):
        assert main(["classifier", "--out", str(tmp_path / "c.onnx"), "--classes", "3"]) == 1


# Real exports download pretrained weights; they only run where the
# optional stacks are installed and the network is reachable.


@pytest.mark.skipif(not HAS_DETECTOR_STACK, reason="ultralytics not installed")
def test_real_detector_export_signature(tmp_path):
    manifest = export_detector(str(tmp_path / "detector.onnx"), size=640)
    assert manifest["input_shape"] == [1, 3, 640, 640]
    assert manifest["output_shape"] == [1, 84, 8400]


@pytest.mark.skipif(not HAS_CLASSIFIER_STACK, reason="torch/timm not installed")
def test_real_classifier_export_signature(tmp_path):
    manifest = export_classifier(str(tmp_path / "classifier.onnx"))
    assert manifest["input_shape"] == [1, 3, 224, 224]
    assert manifest["output_shape"] == [1, 2]
