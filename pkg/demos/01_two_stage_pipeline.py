"""End-to-end walk through the two-stage pipeline on the toy models.

Stage 1 localizes persons in the frame, Stage 2 classifies each cropped
person, and the verdicts are drawn back onto the image. The toy detector
always reports the same two person boxes (that is what makes it a good
test fixture), while the toy classifier's verdict tracks the brightness
of each crop.
"""

from pathlib import Path

import numpy as np

from proctorpipe import ImageBuffer, PipelineConfig, load_model, process_frame
from proctorpipe.imgio import save_png

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
OUT = Path(__file__).parent / "output"

detector = load_model(FIXTURES / "toy_detector.onnx")
classifier = load_model(FIXTURES / "toy_classifier.onnx")
print(f"detector:   {detector.input_spec} -> {detector.output_spec}")
print(f"classifier: {classifier.input_spec} -> {classifier.output_spec}")

# A synthetic exam-room frame: dark background, one bright region under
# the second person box so the two crops get different verdicts.
px = np.full((640, 640, 3), 40, dtype=np.uint8)
px[200:400, 370:470] = 230
frame = ImageBuffer(px)

result = process_frame(frame, detector, classifier, PipelineConfig(), frame_id="demo")
print(f"\n{len(result.verdicts)} person(s) found:")
for i, v in enumerate(result.verdicts):
    x1, y1, x2, y2 = (round(c) for c in v.bbox.as_tuple())
    print(
        f"  person {i}: box=({x1},{y1})-({x2},{y2})  "
        f"verdict={v.label.name}  p(cheating)={v.prob_cheating:.3f}"
    )

print(f"\nstage timings: detect {result.timings.detect_ms:.1f} ms, "
      f"preprocess {result.timings.preprocess_ms:.1f} ms, "
      f"classify {result.timings.classify_ms:.1f} ms")

OUT.mkdir(exist_ok=True)
save_png(result.annotated, OUT / "annotated_frame.png")
print(f"annotated frame written to {OUT / 'annotated_frame.png'}")
