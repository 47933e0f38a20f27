"""Minimal deterministic ONNX serializer.

Emits the protobuf wire encoding of a ModelProto directly, with fields
written in ascending field-number order and tensors stored as raw
little-endian bytes, so the same graph always serializes to the same
bytes. The output is schema-valid ONNX loadable by any conforming
runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple, Union

import numpy as np

DT_FLOAT = 1
DT_INT64 = 7

IR_VERSION = 8
DEFAULT_OPSET = 13


def _varint(value: int) -> bytes:
    if value < 0:
        value += 1 << 64  # two's complement, 10-byte encoding
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _tag(field_number: int, wire_type: int) -> bytes:
    return _varint((field_number << 3) | wire_type)


def _field_varint(field_number: int, value: int) -> bytes:
    return _tag(field_number, 0) + _varint(value)


def _field_bytes(field_number: int, payload: bytes) -> bytes:
    return _tag(field_number, 2) + _varint(len(payload)) + payload


def _field_string(field_number: int, text: str) -> bytes:
    return _field_bytes(field_number, text.encode("utf-8"))


def _field_float(field_number: int, value: float) -> bytes:
    return _tag(field_number, 5) + np.float32(value).tobytes()


def _packed_varints(field_number: int, values: Sequence[int]) -> bytes:
    payload = b"".join(_varint(v) for v in values)
    return _field_bytes(field_number, payload)


# --- message builders ---------------------------------------------------------


def tensor_proto(name: str, array: np.ndarray) -> bytes:
    """TensorProto with raw little-endian payload."""
    if array.dtype == np.float32:
        data_type = DT_FLOAT
    elif array.dtype == np.int64:
        data_type = DT_INT64
    else:
        raise ValueError(f"unsupported tensor dtype {array.dtype}")
    parts = [
        _packed_varints(1, list(array.shape)),  # dims
        _field_varint(2, data_type),
        _field_string(8, name),
        _field_bytes(9, np.ascontiguousarray(array).tobytes()),
    ]
    return b"".join(parts)


_ATTR_FLOAT, _ATTR_INT, _ATTR_STRING, _ATTR_TENSOR = 1, 2, 3, 4
_ATTR_FLOATS, _ATTR_INTS = 6, 7

AttrValue = Union[int, float, str, np.ndarray, Sequence[int], Sequence[float]]


def _attribute(name: str, value: AttrValue) -> bytes:
    parts = [_field_string(1, name)]
    if isinstance(value, bool):
        raise ValueError("attributes take ints, not bools")
    if isinstance(value, int):
        parts.append(_field_varint(3, value))
        atype = _ATTR_INT
    elif isinstance(value, float):
        parts.append(_field_float(2, value))
        atype = _ATTR_FLOAT
    elif isinstance(value, str):
        parts.append(_field_bytes(4, value.encode("utf-8")))
        atype = _ATTR_STRING
    elif isinstance(value, np.ndarray):
        parts.append(_field_bytes(5, tensor_proto("", value)))
        atype = _ATTR_TENSOR
    elif isinstance(value, (list, tuple)) and all(isinstance(v, int) for v in value):
        parts.append(_packed_varints(8, list(value)))
        atype = _ATTR_INTS
    elif isinstance(value, (list, tuple)):
        payload = b"".join(np.float32(v).tobytes() for v in value)
        parts.append(_field_bytes(7, payload))
        atype = _ATTR_FLOATS
    else:
        raise ValueError(f"unsupported attribute value for {name!r}: {value!r}")
    parts.append(_field_varint(20, atype))
    return b"".join(parts)


@dataclass
class Node:
    op_type: str
    inputs: Sequence[str]
    outputs: Sequence[str]
    name: str = ""
    attrs: Dict[str, AttrValue] = field(default_factory=dict)

    def serialize(self) -> bytes:
        parts = []
        parts.extend(_field_string(1, s) for s in self.inputs)
        parts.extend(_field_string(2, s) for s in self.outputs)
        if self.name:
            parts.append(_field_string(3, self.name))
        parts.append(_field_string(4, self.op_type))
        parts.extend(
            _field_bytes(5, _attribute(k, v)) for k, v in sorted(self.attrs.items())
        )
        return b"".join(parts)


def value_info(name: str, shape: Sequence[int], elem_type: int = DT_FLOAT) -> bytes:
    dims = b"".join(
        _field_bytes(1, _field_varint(1, d))  # TensorShapeProto.Dimension.dim_value
        for d in shape
    )
    shape_msg = dims
    tensor_type = _field_varint(1, elem_type) + _field_bytes(2, shape_msg)
    type_proto = _field_bytes(1, tensor_type)
    return _field_string(1, name) + _field_bytes(2, type_proto)


def build_model(
    graph_name: str,
    nodes: Sequence[Node],
    inputs: Sequence[Tuple[str, Sequence[int]]],
    outputs: Sequence[Tuple[str, Sequence[int]]],
    initializers: Sequence[Tuple[str, np.ndarray]] = (),
    opset: int = DEFAULT_OPSET,
    producer: str = "proctor-model-export",
) -> bytes:
    """Serialize a complete ModelProto to bytes."""
    graph_parts = [_field_bytes(1, n.serialize()) for n in nodes]
    graph_parts.append(_field_string(2, graph_name))
    graph_parts.extend(_field_bytes(5, tensor_proto(n, a)) for n, a in initializers)
    graph_parts.extend(_field_bytes(11, value_info(n, s)) for n, s in inputs)
    graph_parts.extend(_field_bytes(12, value_info(n, s)) for n, s in outputs)
    graph = b"".join(graph_parts)

    opset_import = _field_varint(2, opset)  # default domain
    model_parts = [
        _field_varint(1, IR_VERSION),
        _field_string(2, producer),
        _field_bytes(7, graph),
        _field_bytes(8, opset_import),
    ]
    return b"".join(model_parts)
