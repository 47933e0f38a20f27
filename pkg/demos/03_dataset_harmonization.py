"""Dataset harmonization: many label vocabularies into one binary one.

Builds two tiny synthetic sources on disk (normalized-center annotation
layout), runs the ingest + global label mapping + bbox validation +
de-duplication, then splits 80/10/10 with the fixed seed.
"""

import tempfile
from collections import Counter
from pathlib import Path

import numpy as np
from PIL import Image

from proctorpipe import harmonize, map_label, split
from proctorpipe.errors import UnknownLabel

# The global mapping in action: heterogeneous raw labels, two classes out.
for raw in ("Mobile", "person", "cheating-paper", "Hand-Normalmove"):
    label = map_label(raw)
    print(f"  {raw!r:>18} -> ({label.name}, {label.id})")
try:
    map_label("telephone")
except UnknownLabel as exc:
    print(f"  'telephone'        -> rejected ({exc})")


def write_source(root: Path, name: str, classes, files):
    src = root / name
    (src / "images").mkdir(parents=True)
    (src / "labels").mkdir()
    (src / "classes.txt").write_text("\n".join(classes) + "\n")
    for stem, lines, seed in files:
        px = np.random.default_rng(seed).integers(0, 256, (48, 64, 3), dtype=np.uint8)
        Image.fromarray(px).save(src / "images" / f"{stem}.png")
        (src / "labels" / f"{stem}.txt").write_text("\n".join(lines) + "\n")
    return src


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    a = write_source(
        root, "roomcam_a", ("person", "Cheating"),
        [("f0", ["0 0.5 0.5 0.4 0.6", "1 0.2 0.3 0.2 0.2"], 10),
         ("f1", ["0 0.55 0.5 0.3 0.5"], 11)],
    )
    b = write_source(
        root, "roomcam_b", ("normal", "Mobile", "telephone"),
        [("g0", ["0 0.5 0.5 0.4 0.6", "1 0.8 0.4 0.2 0.3", "2 0.3 0.3 0.1 0.1"], 12),
         ("g1", ["0 0.99 0.5 0.1 0.2"], 13)],   # pokes past the right edge
    )

    records, report = harmonize([str(a), str(b)])
    print(f"\ningested {report.n_records} records")
    print(f"  per source: {dict(report.per_source)}")
    print(f"  per class:  {dict(report.per_class)}")
    print(f"  warnings:   {dict(report.warnings)}")

    assignment = split(records, seed=2024)
    print(f"\n80/10/10 split with seed {assignment.seed}: "
          f"train={len(assignment.train)} val={len(assignment.val)} test={len(assignment.test)}")
    print("  train labels:", Counter(r.label.name for r in assignment.train))
