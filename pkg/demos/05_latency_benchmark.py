"""Latency benchmarking over a synthetic frame batch.

The clock wraps model execution and tensor preparation only (file decode
and annotation drawing are excluded), and the report carries both
per-frame and per-ROI means since a person-level pipeline is naturally
quoted either way.
"""

from pathlib import Path

import numpy as np

from proctorpipe import ImageBuffer, PipelineConfig, load_model, run_batch

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

detector = load_model(FIXTURES / "toy_detector.onnx")
classifier = load_model(FIXTURES / "toy_classifier.onnx")

rng = np.random.default_rng(0)
frames = [
    (f"frame_{i:03d}", ImageBuffer(rng.integers(0, 256, (640, 640, 3), dtype=np.uint8)))
    for i in range(32)
]

results, bench = run_batch(frames, detector, classifier, PipelineConfig())
print(f"frames: {bench.n_samples}   person crops: {bench.n_rois}")
print(f"mean  {bench.mean_ms:8.2f} ms/frame")
print(f"p50   {bench.p50_ms:8.2f} ms")
print(f"p95   {bench.p95_ms:8.2f} ms")
print(f"range [{bench.min_ms:.2f}, {bench.max_ms:.2f}] ms")
print(f"per ROI: {bench.mean_ms_per_roi:.2f} ms")
print("per stage means:")
for stage, value in bench.per_stage_means.items():
    print(f"  {stage:<14} {value:8.2f} ms")

# The same batch through 4 workers returns results in identical order.
par_results, _ = run_batch(frames, detector, classifier, PipelineConfig(), jobs=4)
assert [r.frame_id for r in par_results] == [r.frame_id for r in results]
assert all(a.verdicts == b.verdicts for a, b in zip(results, par_results))
print("\n4-worker run reproduces the sequential verdicts in order")
