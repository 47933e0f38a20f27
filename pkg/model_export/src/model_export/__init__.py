"""Model graph producer for proctorpipe.

Two kinds of output: real pretrained exports (network-dependent, see
`real`) and tiny deterministic toy models for tests (`toys`). Everything
is exchanged with the consumer through ONNX files plus manifest JSONs;
this package never imports proctorpipe.
"""

from .toys import make_toy_models

__all__ = ["make_toy_models"]
