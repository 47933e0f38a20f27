"""Reader for the ONNX interchange format.

Parses the protobuf wire encoding directly (no protobuf runtime needed)
into lightweight graph structures. Only the message subset required to
execute inference graphs is materialized; unknown fields are skipped per
standard protobuf rules, so files produced by mainstream exporters load
fine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import MalformedGraph

# TensorProto.DataType values from the public schema.
DT_FLOAT = 1
DT_UINT8 = 2
DT_INT8 = 3
DT_INT32 = 6
DT_INT64 = 7
DT_BOOL = 9
DT_DOUBLE = 11

_NP_DTYPES = {
    DT_FLOAT: np.float32,
    DT_UINT8: np.uint8,
    DT_INT8: np.int8,
    DT_INT32: np.int32,
    DT_INT64: np.int64,
    DT_BOOL: np.bool_,
    DT_DOUBLE: np.float64,
}


@dataclass
class NodeDef:
    op_type: str
    inputs: List[str]
    outputs: List[str]
    name: str = ""
    attrs: Dict[str, object] = field(default_factory=dict)


@dataclass
class ValueDef:
    name: str
    elem_type: Optional[int] = None
    # None: the graph declares no shape at all. Entries of None are
    # symbolic (dynamic) dimensions.
    shape: Optional[Tuple[Optional[int], ...]] = None


@dataclass
class GraphDef:
    name: str
    nodes: List[NodeDef]
    initializers: Dict[str, np.ndarray]
    inputs: List[ValueDef]
    outputs: List[ValueDef]
    opset: int
    producer: str = ""


# --- protobuf wire-format primitives ---------------------------------------


def _read_varint(buf: bytes, pos: int) -> Tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise MalformedGraph("truncated varint")
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise MalformedGraph("varint too long")


def _signed(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def _iter_fields(buf: bytes):
    """Yield (field_number, wire_type, value) triples from a message."""
    pos = 0
    n = len(buf)
    while pos < n:
        key, pos = _read_varint(buf, pos)
        fnum, wire = key >> 3, key & 7
        if fnum == 0:
            raise MalformedGraph("field number 0")
        if wire == 0:
            val, pos = _read_varint(buf, pos)
        elif wire == 1:
            if pos + 8 > n:
                raise MalformedGraph("truncated fixed64")
            val = buf[pos : pos + 8]
            pos += 8
        elif wire == 2:
            ln, pos = _read_varint(buf, pos)
            if pos + ln > n:
                raise MalformedGraph("truncated length-delimited field")
            val = buf[pos : pos + ln]
            pos += ln
        elif wire == 5:
            if pos + 4 > n:
                raise MalformedGraph("truncated fixed32")
            val = buf[pos : pos + 4]
            pos += 4
        else:
            raise MalformedGraph(f"unsupported wire type {wire}")
        yield fnum, wire, val


def _packed_varints(data: bytes) -> List[int]:
    out = []
    pos = 0
    while pos < len(data):
        v, pos = _read_varint(data, pos)
        out.append(_signed(v))
    return out


# --- ONNX message parsers ---------------------------------------------------


def _parse_tensor(buf: bytes) -> Tuple[str, np.ndarray]:
    dims: List[int] = []
    data_type = DT_FLOAT
    raw: Optional[bytes] = None
    name = ""
    float_data: List[float] = []
    int32_data: List[int] = []
    int64_data: List[int] = []
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1:  # dims
            if wire == 0:
                dims.append(_signed(val))
            else:
                dims.extend(_packed_varints(val))
        elif fnum == 2 and wire == 0:
            data_type = val
        elif fnum == 4:  # float_data
            if wire == 5:
                float_data.append(np.frombuffer(val, "<f4")[0])
            else:
                float_data.extend(np.frombuffer(val, "<f4").tolist())
        elif fnum == 5:  # int32_data
            if wire == 0:
                int32_data.append(_signed(val))
            else:
                int32_data.extend(_packed_varints(val))
        elif fnum == 7:  # int64_data
            if wire == 0:
                int64_data.append(_signed(val))
            else:
                int64_data.extend(_packed_varints(val))
        elif fnum == 8 and wire == 2:
            name = val.decode("utf-8")
        elif fnum == 9 and wire == 2:
            raw = val
    dtype = _NP_DTYPES.get(data_type)
    if dtype is None:
        raise MalformedGraph(f"unsupported tensor data type {data_type}")
    if raw is not None:
        arr = np.frombuffer(raw, dtype=dtype)
    elif float_data and data_type == DT_FLOAT:
        arr = np.asarray(float_data, dtype=np.float32)
    elif int64_data and data_type == DT_INT64:
        arr = np.asarray(int64_data, dtype=np.int64)
    elif int32_data and data_type in (DT_INT32, DT_BOOL, DT_UINT8, DT_INT8):
        arr = np.asarray(int32_data).astype(dtype)
    else:
        arr = np.zeros(0, dtype=dtype)
    try:
        arr = arr.reshape(dims)
    except ValueError as exc:
        raise MalformedGraph(f"tensor {name!r}: {exc}") from exc
    return name, arr


# AttributeProto.AttributeType values.
_ATTR_FLOAT, _ATTR_INT, _ATTR_STRING, _ATTR_TENSOR = 1, 2, 3, 4
_ATTR_FLOATS, _ATTR_INTS, _ATTR_STRINGS = 6, 7, 8


def _parse_attribute(buf: bytes) -> Tuple[str, object]:
    name = ""
    atype = None
    f_val = None
    i_val = None
    s_val = None
    t_val = None
    floats: List[float] = []
    ints: List[int] = []
    strings: List[str] = []
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1 and wire == 2:
            name = val.decode("utf-8")
        elif fnum == 2 and wire == 5:
            f_val = float(np.frombuffer(val, "<f4")[0])
        elif fnum == 3 and wire == 0:
            i_val = _signed(val)
        elif fnum == 4 and wire == 2:
            s_val = val.decode("utf-8", "replace")
        elif fnum == 5 and wire == 2:
            _, t_val = _parse_tensor(val)
        elif fnum == 7:
            if wire == 5:
                floats.append(float(np.frombuffer(val, "<f4")[0]))
            else:
                floats.extend(np.frombuffer(val, "<f4").tolist())
        elif fnum == 8:
            if wire == 0:
                ints.append(_signed(val))
            else:
                ints.extend(_packed_varints(val))
        elif fnum == 9 and wire == 2:
            strings.append(val.decode("utf-8", "replace"))
        elif fnum == 20 and wire == 0:
            atype = val
    by_type = {
        _ATTR_FLOAT: f_val,
        _ATTR_INT: i_val,
        _ATTR_STRING: s_val,
        _ATTR_TENSOR: t_val,
        _ATTR_FLOATS: tuple(floats),
        _ATTR_INTS: tuple(ints),
        _ATTR_STRINGS: tuple(strings),
    }
    if atype in by_type:
        return name, by_type[atype]
    # Type tag omitted: fall back to whichever field was populated.
    for candidate in (t_val, s_val, i_val, f_val):
        if candidate is not None:
            return name, candidate
    if ints:
        return name, tuple(ints)
    if floats:
        return name, tuple(floats)
    return name, tuple(strings)


def _parse_node(buf: bytes) -> NodeDef:
    node = NodeDef(op_type="", inputs=[], outputs=[])
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1 and wire == 2:
            node.inputs.append(val.decode("utf-8"))
        elif fnum == 2 and wire == 2:
            node.outputs.append(val.decode("utf-8"))
        elif fnum == 3 and wire == 2:
            node.name = val.decode("utf-8")
        elif fnum == 4 and wire == 2:
            node.op_type = val.decode("utf-8")
        elif fnum == 5 and wire == 2:
            aname, aval = _parse_attribute(val)
            node.attrs[aname] = aval
    if not node.op_type:
        raise MalformedGraph("node without op_type")
    return node


def _parse_dim(buf: bytes) -> Optional[int]:
    dim_value = None
    dim_param = None
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1 and wire == 0:
            dim_value = _signed(val)
        elif fnum == 2 and wire == 2:
            dim_param = val.decode("utf-8")
    if dim_value is not None and dim_value >= 0:
        return dim_value
    if dim_param is not None:
        return None  # symbolic
    return None


def _parse_value_info(buf: bytes) -> ValueDef:
    value = ValueDef(name="")
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1 and wire == 2:
            value.name = val.decode("utf-8")
        elif fnum == 2 and wire == 2:  # TypeProto
            for tf, tw, tv in _iter_fields(val):
                if tf == 1 and tw == 2:  # tensor_type
                    shape_seen = False
                    dims: List[Optional[int]] = []
                    for sf, sw, sv in _iter_fields(tv):
                        if sf == 1 and sw == 0:
                            value.elem_type = sv
                        elif sf == 2 and sw == 2:  # TensorShapeProto
                            shape_seen = True
                            for df, dw, dv in _iter_fields(sv):
                                if df == 1 and dw == 2:
                                    dims.append(_parse_dim(dv))
                    if shape_seen:
                        value.shape = tuple(dims)
    return value


def _parse_graph(buf: bytes) -> GraphDef:
    graph = GraphDef(name="", nodes=[], initializers={}, inputs=[], outputs=[], opset=0)
    for fnum, wire, val in _iter_fields(buf):
        if fnum == 1 and wire == 2:
            graph.nodes.append(_parse_node(val))
        elif fnum == 2 and wire == 2:
            graph.name = val.decode("utf-8")
        elif fnum == 5 and wire == 2:
            name, arr = _parse_tensor(val)
            graph.initializers[name] = arr
        elif fnum == 11 and wire == 2:
            graph.inputs.append(_parse_value_info(val))
        elif fnum == 12 and wire == 2:
            graph.outputs.append(_parse_value_info(val))
    return graph


def parse_model(data: bytes) -> GraphDef:
    """Parse serialized ONNX model bytes into a GraphDef.

    Raises MalformedGraph for anything that is not a structurally valid
    model with a graph.
    """
    if not data:
        raise MalformedGraph("empty file")
    graph: Optional[GraphDef] = None
    producer = ""
    opset = 0
    try:
        for fnum, wire, val in _iter_fields(data):
            if fnum == 7 and wire == 2:
                graph = _parse_graph(val)
            elif fnum == 2 and wire == 2:
                producer = val.decode("utf-8", "replace")
            elif fnum == 8 and wire == 2:
                domain = ""
                version = 0
                for of, ow, ov in _iter_fields(val):
                    if of == 1 and ow == 2:
                        domain = ov.decode("utf-8")
                    elif of == 2 and ow == 0:
                        version = _signed(ov)
                if domain == "":
                    opset = version
    except MalformedGraph:
        raise
    except Exception as exc:  # defensive: any decode error means corruption
        raise MalformedGraph(str(exc)) from exc
    if graph is None:
        raise MalformedGraph("no graph in model file")
    graph.opset = opset
    graph.producer = producer
    return graph
