import numpy as np
import pytest

from proctorpipe.errors import (
    MalformedGraph,
    ShapeMismatch,
    ShapeUnavailable,
    UnsupportedOperator,
)
from proctorpipe.runtime import load_model, run_inference

from conftest import FIXTURES


# --- hand-encoded minimal models for corrupt/degenerate cases ----------------


def _varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _msg(field: int, payload: bytes) -> bytes:
    return _varint((field << 3) | 2) + _varint(len(payload)) + payload


def _int(field: int, value: int) -> bytes:
    return _varint((field << 3) | 0) + _varint(value)


def _mini_model(with_shapes: bool, op_type: bytes = b"Identity") -> bytes:
    def value_info(name: bytes) -> bytes:
        tensor_type = _int(1, 1)  # elem_type FLOAT
        if with_shapes:
            dim = _msg(1, _int(1, 1))
            tensor_type += _msg(2, dim)
        return _msg(1, name) + _msg(2, _msg(1, tensor_type))

    node = _msg(1, b"x") + _msg(2, b"y") + _msg(4, op_type)
    graph = _msg(1, node) + _msg(11, value_info(b"x")) + _msg(12, value_info(b"y"))
    return _int(1, 8) + _msg(7, graph) + _msg(8, _int(2, 13))


@pytest.fixture
def mini_model_path(tmp_path):
    def write(with_shapes=True, op_type=b"Identity"):
        path = tmp_path / "mini.onnx"
        path.write_bytes(_mini_model(with_shapes, op_type))
        return path

    return write


# --- loading -------------------------------------------------------------------


class TestLoadModel:
    def test_reads_back_exported_signature(self, toy_detector, detector_manifest):
        assert toy_detector.input_spec == {
            detector_manifest["input_name"]: tuple(detector_manifest["input_shape"])
        }
        assert toy_detector.output_spec == {
            detector_manifest["output_name"]: tuple(detector_manifest["output_shape"])
        }

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "nope.onnx")

    def test_truncated_file(self, tmp_path):
        valid = (FIXTURES / "toy_detector.onnx").read_bytes()
        stub = tmp_path / "truncated.onnx"
        stub.write_bytes(valid[:16])
        with pytest.raises(MalformedGraph):
            load_model(stub)

    def test_garbage_file(self, tmp_path):
        stub = tmp_path / "garbage.onnx"
        stub.write_bytes(b"definitely not a model graph")
        with pytest.raises(MalformedGraph):
            load_model(stub)

    def test_empty_file(self, tmp_path):
        stub = tmp_path / "empty.onnx"
        stub.write_bytes(b"")
        with pytest.raises(MalformedGraph):
            load_model(stub)

    def test_shapeless_graph_reports_names(self, mini_model_path):
        with pytest.raises(ShapeUnavailable) as excinfo:
            load_model(mini_model_path(with_shapes=False))
        assert "x" in excinfo.value.names
        assert "y" in excinfo.value.names

    def test_minimal_identity_model_runs(self, mini_model_path):
        session = load_model(mini_model_path())
        out = run_inference(session, {"x": np.asarray([3.5], dtype=np.float32)})
        assert out["y"].tolist() == [3.5]


# --- inference -------------------------------------------------------------------


class TestRunInference:
    def test_classifier_matches_documented_rule(self, toy_classifier, classifier_manifest):
        gain = classifier_manifest["behavior"]["gain"]
        roi = np.full((1, 3, 224, 224), 0.25, dtype=np.float32)
        out = run_inference(toy_classifier, {"input": roi})
        logits = out["logits"]
        assert logits.shape == (1, 2)
        np.testing.assert_allclose(logits[0], [-gain * 0.25, gain * 0.25], rtol=1e-6)

    def test_detector_emits_manifest_anchors(self, toy_detector, detector_manifest):
        x = np.random.default_rng(3).random((1, 3, 640, 640), dtype=np.float32)
        out = run_inference(toy_detector, {"images": x})["output0"]
        expected = np.zeros(out.shape, dtype=np.float32)
        for a, anchor in enumerate(detector_manifest["behavior"]["anchors"]):
            expected[0, 0, a] = anchor["cx"]
            expected[0, 1, a] = anchor["cy"]
            expected[0, 2, a] = anchor["w"]
            expected[0, 3, a] = anchor["h"]
            expected[0, 4 + anchor["class_id"], a] = anchor["score"]
        np.testing.assert_array_equal(out, expected)

    def test_wrong_rank_rejected(self, toy_classifier):
        with pytest.raises(ShapeMismatch):
            run_inference(toy_classifier, {"input": np.zeros((3, 224, 224), np.float32)})

    def test_wrong_dim_rejected(self, toy_classifier):
        with pytest.raises(ShapeMismatch):
            run_inference(toy_classifier, {"input": np.zeros((1, 3, 224, 223), np.float32)})

    def test_wrong_name_rejected(self, toy_classifier):
        with pytest.raises(ShapeMismatch):
            run_inference(toy_classifier, {"data": np.zeros((1, 3, 224, 224), np.float32)})

    def test_deterministic(self, toy_classifier):
        x = np.random.default_rng(11).random((1, 3, 224, 224), dtype=np.float32)
        first = run_inference(toy_classifier, {"input": x})
        second = run_inference(toy_classifier, {"input": x})
        np.testing.assert_array_equal(first["logits"], second["logits"])

    def test_outputs_match_declared_spec(self, toy_detector, toy_classifier):
        x = np.random.default_rng(5).random((1, 3, 640, 640), dtype=np.float32)
        out = run_inference(toy_detector, {"images": x})
        assert out["output0"].shape == toy_detector.output_spec["output0"]
        roi = np.random.default_rng(6).random((1, 3, 224, 224), dtype=np.float32)
        out = run_inference(toy_classifier, {"input": roi})
        assert out["logits"].shape == toy_classifier.output_spec["logits"]

    def test_unsupported_operator(self, mini_model_path):
        session = load_model(mini_model_path(op_type=b"Conv"))
        with pytest.raises(UnsupportedOperator):
            run_inference(session, {"x": np.zeros(1, np.float32)})
