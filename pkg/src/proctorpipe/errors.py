"""Exception types shared across the toolkit.

The hierarchy mirrors the CLI exit-code contract: ``DataError`` maps to
exit 2, ``ModelError`` to exit 3, ``UsageError`` to exit 1.
"""


class ProctorError(Exception):
    """Base class for all toolkit errors."""


class UsageError(ProctorError):
    """Bad command-line or API usage."""


class DataError(ProctorError):
    """Problems with datasets, manifests, or annotations."""


class UnknownLabel(DataError):
    """A raw annotation label has no entry in the global mapping table."""

    def __init__(self, raw: str):
        super().__init__(f"unknown raw label: {raw!r}")
        self.raw = raw


class EmptyDataset(DataError):
    """A split was requested over zero records."""


class EmptyEvaluation(DataError):
    """Metrics were requested over zero evaluation pairs."""


class EmptyManifest(DataError):
    """A batch run was requested over zero frames."""


class UnreadableSource(DataError):
    """A dataset source directory is missing or lacks its annotation index."""


class EmptyAfterClamp(DataError):
    """A crop box lies entirely outside the image."""


class ModelError(ProctorError):
    """Problems loading or executing a model graph."""


class MalformedGraph(ModelError):
    """The model file is corrupt or not a supported graph format."""


class ShapeUnavailable(ModelError):
    """The graph declares inputs/outputs without static shape information."""

    def __init__(self, names):
        super().__init__(f"graph omits static shapes for: {', '.join(names)}")
        self.names = list(names)


class ShapeMismatch(ModelError):
    """An input or output tensor does not match the session's signature."""


class RuntimeFailure(ModelError):
    """The backend failed while executing the graph."""


class UnsupportedOperator(RuntimeFailure):
    """The built-in evaluator has no implementation for a graph node."""

    def __init__(self, op_type: str):
        super().__init__(f"unsupported operator: {op_type}")
        self.op_type = op_type


class IoFailure(ProctorError):
    """One or more output files could not be written."""

    def __init__(self, failures):
        self.failures = list(failures)
        detail = "; ".join(f"{name}: {err}" for name, err in self.failures)
        super().__init__(f"{len(self.failures)} write failure(s): {detail}")
