"""Detector postprocessing, step by step, on hand-built tensors.

Shows the letterbox geometry, raw-output decoding with the 0.25
confidence threshold, per-class greedy NMS at IoU 0.45, and the person
filter that feeds Stage 2.
"""

import numpy as np

from proctorpipe import DetectorConfig, ImageBuffer, iou, letterbox
from proctorpipe.detection import decode_detector_output, filter_person, nms

cfg = DetectorConfig()
print(f"config: conf={cfg.conf_threshold} iou={cfg.iou_threshold} input={cfg.input_size}")

# 1. Letterbox a 1280x720 frame onto the square detector canvas.
frame = ImageBuffer(np.zeros((720, 1280, 3), dtype=np.uint8))
_, params = letterbox(frame, cfg.input_size)
print(f"\nletterbox 1280x720 -> 640x640: scale={params.scale}, "
      f"pad_left={params.pad_left}, pad_top={params.pad_top}")
print(f"  original (640, 360) maps to {params.to_letterbox(640, 360)}")

# 2. Decode a raw [1, 84, A] head tensor: 4 anchors, one below threshold.
raw = np.zeros((1, 84, 4), dtype=np.float32)
anchor_rows = [
    (200, 180, 80, 160, 0, 0.90),   # person, confident
    (420, 300, 100, 200, 0, 0.85),  # person, confident
    (320, 500, 64, 64, 0, 0.20),    # person, below 0.25 -> dropped
    (320, 320, 120, 120, 56, 0.80), # chair
]
for a, (cx, cy, w, h, cid, score) in enumerate(anchor_rows):
    raw[0, :4, a] = [cx, cy, w, h]
    raw[0, 4 + cid, a] = score

detections = decode_detector_output(raw, params, cfg, 1280, 720)
print(f"\ndecoded {len(detections)} of 4 anchors (one fell under the threshold):")
for d in detections:
    print(f"  {d.class_name:<8} score={d.score:.2f} box={tuple(round(v) for v in d.bbox.as_tuple())}")

# 3. NMS keeps the best of overlapping same-class boxes.
kept = nms(detections, cfg.iou_threshold)
a, b = kept[0].bbox, kept[1].bbox
print(f"\nafter NMS: {len(kept)} boxes (pairwise person IoU {iou(a, b):.3f})")

# 4. Everything that is not a person is discarded before Stage 2.
person_boxes = filter_person(kept, cfg)
print(f"person boxes for Stage 2: {[tuple(round(v) for v in b.as_tuple()) for b in person_boxes]}")
