"""Model loading and execution.

A ModelSession wraps one loaded graph behind a backend-neutral surface:
the bundled pure-numpy evaluator runs a documented operator subset (all
32-bit float math, bitwise deterministic), and onnxruntime is picked up
automatically when installed for full-coverage execution of large
pretrained exports.
"""

from __future__ import annotations

import importlib.util
import threading
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from . import onnxfile
from .errors import (
    MalformedGraph,
    RuntimeFailure,
    ShapeMismatch,
    ShapeUnavailable,
    UnsupportedOperator,
)

Shape = Tuple[Optional[int], ...]


@dataclass
class ModelSession:
    """One loaded model graph; admits a single in-flight inference."""

    graph_path: str
    input_spec: Dict[str, Shape]
    output_spec: Dict[str, Shape]
    _backend: object = field(repr=False, default=None)
    _lock: threading.Lock = field(repr=False, default_factory=threading.Lock)

    @property
    def input_name(self) -> str:
        (name,) = self.input_spec.keys() if len(self.input_spec) == 1 else (None,)
        if name is None:
            raise ShapeMismatch(f"model has {len(self.input_spec)} inputs, expected exactly 1")
        return name

    @property
    def output_name(self) -> str:
        (name,) = self.output_spec.keys() if len(self.output_spec) == 1 else (None,)
        if name is None:
            raise ShapeMismatch(f"model has {len(self.output_spec)} outputs, expected exactly 1")
        return name


def load_model(path: str, backend: str = "auto") -> ModelSession:
    """Load a portable graph file and expose its input/output signatures.

    backend: "auto" prefers onnxruntime when installed, otherwise the
    built-in numpy evaluator; "builtin" / "onnxruntime" force a choice.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    use_ort = False
    if backend == "onnxruntime":
        use_ort = True
    elif backend == "auto":
        use_ort = importlib.util.find_spec("onnxruntime") is not None
    elif backend != "builtin":
        raise ValueError(f"unknown backend {backend!r}")

    if use_ort:
        return _load_ort(path, data)

    graph = onnxfile.parse_model(data)
    init_names = set(graph.initializers)
    inputs = [v for v in graph.inputs if v.name not in init_names]
    outputs = graph.outputs
    shapeless = [v.name for v in inputs + outputs if v.shape is None]
    if shapeless:
        raise ShapeUnavailable(shapeless)
    if not inputs or not outputs:
        raise MalformedGraph("graph declares no inputs or no outputs")
    session = ModelSession(
        graph_path=str(path),
        input_spec={v.name: v.shape for v in inputs},
        output_spec={v.name: v.shape for v in outputs},
    )
    session._backend = _NumpyBackend(graph)
    return session


def run_inference(
    session: ModelSession, inputs: Mapping[str, np.ndarray]
) -> Dict[str, np.ndarray]:
    """Execute one forward pass. Deterministic for identical inputs."""
    feeds = {}
    expected = session.input_spec
    if set(inputs) != set(expected):
        raise ShapeMismatch(
            f"input names {sorted(inputs)} do not match signature {sorted(expected)}"
        )
    for name, value in inputs.items():
        arr = np.asarray(value, dtype=np.float32)
        _check_shape(name, arr.shape, expected[name])
        feeds[name] = arr
    with session._lock:
        outputs = session._backend.run(feeds)
    for name, spec in session.output_spec.items():
        if name in outputs:
            _check_shape(name, outputs[name].shape, spec, kind=RuntimeFailure)
    return outputs


def _check_shape(name: str, actual, spec: Shape, kind=ShapeMismatch) -> None:
    if spec is None:
        return
    ok = len(actual) == len(spec) and all(
        s is None or s == a for s, a in zip(spec, actual)
    )
    if not ok:
        raise kind(f"tensor {name!r}: shape {tuple(actual)} does not match {spec}")


# --- numpy evaluator ---------------------------------------------------------


class _NumpyBackend:
    def __init__(self, graph: onnxfile.GraphDef):
        self.graph = graph

    def run(self, feeds: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        env: Dict[str, np.ndarray] = dict(self.graph.initializers)
        env.update(feeds)
        for node in self.graph.nodes:
            fn = _OPS.get(node.op_type)
            if fn is None:
                raise UnsupportedOperator(node.op_type)
            try:
                args = [env[n] if n else None for n in node.inputs]
            except KeyError as exc:
                raise RuntimeFailure(f"node {node.name!r} reads undefined tensor {exc}") from exc
            try:
                results = fn(node, args)
            except (RuntimeFailure, UnsupportedOperator):
                raise
            except Exception as exc:
                raise RuntimeFailure(f"{node.op_type} node {node.name!r}: {exc}") from exc
            if not isinstance(results, tuple):
                results = (results,)
            for out_name, value in zip(node.outputs, results):
                if out_name:
                    env[out_name] = np.asarray(value)
        missing = [v.name for v in self.graph.outputs if v.name not in env]
        if missing:
            raise RuntimeFailure(f"graph produced no value for outputs {missing}")
        return {v.name: env[v.name] for v in self.graph.outputs}


def _axes_of(node, args, index=1):
    axes = node.attrs.get("axes")
    if axes is None and len(args) > index and args[index] is not None:
        axes = tuple(int(a) for a in np.asarray(args[index]).ravel())
    return tuple(axes) if axes else None


def _op_gemm(node, args):
    a, b = args[0], args[1]
    if node.attrs.get("transA", 0):
        a = a.T
    if node.attrs.get("transB", 0):
        b = b.T
    y = node.attrs.get("alpha", 1.0) * (a @ b)
    if len(args) > 2 and args[2] is not None:
        y = y + node.attrs.get("beta", 1.0) * args[2]
    return y.astype(np.float32)


def _op_reshape(node, args):
    data, shape = args[0], np.asarray(args[1]).ravel().astype(int)
    out = []
    for i, d in enumerate(shape):
        if d == 0 and not node.attrs.get("allowzero", 0):
            out.append(data.shape[i])
        else:
            out.append(int(d))
    return data.reshape(out)


def _op_flatten(node, args):
    axis = node.attrs.get("axis", 1)
    shape = args[0].shape
    lead = int(np.prod(shape[:axis])) if axis > 0 else 1
    return args[0].reshape(lead, -1)


def _op_reduce(np_fn):
    def op(node, args):
        axes = _axes_of(node, args)
        keep = bool(node.attrs.get("keepdims", 1))
        return np_fn(args[0], axis=axes, keepdims=keep)

    return op


def _op_softmax(node, args):
    axis = node.attrs.get("axis", -1)
    x = args[0]
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return (e / np.sum(e, axis=axis, keepdims=True)).astype(x.dtype)


def _op_sigmoid(node, args):
    with np.errstate(over="ignore"):
        return (1.0 / (1.0 + np.exp(-args[0]))).astype(args[0].dtype)


def _op_slice(node, args):
    data = args[0]
    if len(args) > 1 and args[1] is not None:
        starts = np.asarray(args[1]).ravel().astype(int)
        ends = np.asarray(args[2]).ravel().astype(int)
        axes = (
            np.asarray(args[3]).ravel().astype(int)
            if len(args) > 3 and args[3] is not None
            else np.arange(len(starts))
        )
        steps = (
            np.asarray(args[4]).ravel().astype(int)
            if len(args) > 4 and args[4] is not None
            else np.ones(len(starts), dtype=int)
        )
    else:  # legacy attribute form
        starts = np.asarray(node.attrs["starts"], dtype=int)
        ends = np.asarray(node.attrs["ends"], dtype=int)
        axes = np.asarray(node.attrs.get("axes", range(len(starts))), dtype=int)
        steps = np.ones(len(starts), dtype=int)
    slicer = [slice(None)] * data.ndim
    for ax, s, e, st in zip(axes, starts, ends, steps):
        slicer[ax] = slice(int(s), int(e), int(st))
    return data[tuple(slicer)]


def _op_squeeze(node, args):
    axes = _axes_of(node, args)
    if axes is None:
        return np.squeeze(args[0])
    return np.squeeze(args[0], axis=axes)


def _op_unsqueeze(node, args):
    axes = _axes_of(node, args)
    out = args[0]
    for ax in sorted(axes):
        out = np.expand_dims(out, ax)
    return out


def _op_cast(node, args):
    dtype = onnxfile._NP_DTYPES.get(node.attrs.get("to"))
    if dtype is None:
        raise UnsupportedOperator(f"Cast to type {node.attrs.get('to')}")
    return args[0].astype(dtype)


def _op_clip(node, args):
    lo = args[1] if len(args) > 1 and args[1] is not None else node.attrs.get("min")
    hi = args[2] if len(args) > 2 and args[2] is not None else node.attrs.get("max")
    return np.clip(args[0], lo, hi)


_OPS = {
    "Identity": lambda node, args: args[0],
    "Constant": lambda node, args: node.attrs["value"],
    "Add": lambda node, args: args[0] + args[1],
    "Sub": lambda node, args: args[0] - args[1],
    "Mul": lambda node, args: args[0] * args[1],
    "Div": lambda node, args: args[0] / args[1],
    "Pow": lambda node, args: np.power(args[0], args[1]),
    "Neg": lambda node, args: -args[0],
    "Abs": lambda node, args: np.abs(args[0]),
    "Exp": lambda node, args: np.exp(args[0]),
    "Log": lambda node, args: np.log(args[0]),
    "Sqrt": lambda node, args: np.sqrt(args[0]),
    "Tanh": lambda node, args: np.tanh(args[0]),
    "Relu": lambda node, args: np.maximum(args[0], 0),
    "Sigmoid": _op_sigmoid,
    "Softmax": _op_softmax,
    "MatMul": lambda node, args: np.matmul(args[0], args[1]),
    "Gemm": _op_gemm,
    "Reshape": _op_reshape,
    "Flatten": _op_flatten,
    "Transpose": lambda node, args: np.transpose(args[0], node.attrs.get("perm") or None),
    "Concat": lambda node, args: np.concatenate(args, axis=node.attrs["axis"]),
    "ReduceMean": _op_reduce(np.mean),
    "ReduceSum": _op_reduce(np.sum),
    "ReduceMax": _op_reduce(np.max),
    "ReduceMin": _op_reduce(np.min),
    "Squeeze": _op_squeeze,
    "Unsqueeze": _op_unsqueeze,
    "Slice": _op_slice,
    "Shape": lambda node, args: np.asarray(args[0].shape, dtype=np.int64),
    "Cast": _op_cast,
    "Clip": _op_clip,
}


# --- optional onnxruntime backend --------------------------------------------


class _OrtBackend:
    def __init__(self, ort_session):
        self.ort = ort_session
        self.out_names = [o.name for o in ort_session.get_outputs()]

    def run(self, feeds):
        try:
            values = self.ort.run(self.out_names, feeds)
        except Exception as exc:
            raise RuntimeFailure(str(exc)) from exc
        return dict(zip(self.out_names, values))


def _ort_shape(raw) -> Shape:
    return tuple(d if isinstance(d, int) else None for d in raw)


def _load_ort(path: str, data: bytes) -> ModelSession:
    import onnxruntime as ort

    try:
        ort_session = ort.InferenceSession(data, providers=["CPUExecutionProvider"])
    except Exception as exc:
        raise MalformedGraph(str(exc)) from exc
    ins = ort_session.get_inputs()
    outs = ort_session.get_outputs()
    shapeless = [t.name for t in list(ins) + list(outs) if t.shape is None]
    if shapeless:
        raise ShapeUnavailable(shapeless)
    session = ModelSession(
        graph_path=str(path),
        input_spec={t.name: _ort_shape(t.shape) for t in ins},
        output_spec={t.name: _ort_shape(t.shape) for t in outs},
    )
    session._backend = _OrtBackend(ort_session)
    return session
