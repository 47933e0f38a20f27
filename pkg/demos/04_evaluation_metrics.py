"""Confusion-matrix metrics and the classification report.

Uses the reference confusion counts that the acceptance suite checks the
arithmetic against, plus the full-frame ablation labeling rule.
"""

from proctorpipe import (
    BBox,
    CHEATING,
    ConfusionCounts,
    EvalPair,
    HarmonizedRecord,
    NOT_CHEATING,
    ablation_label,
    accuracy,
    classification_report,
    f1,
    precision,
    recall,
)
from proctorpipe.evalkit import confusion_csv

counts = ConfusionCounts(tp=1672, tn=4905, fp=152, fn=166)
print("reference confusion counts (positive class = cheating):")
print(confusion_csv(counts))
print(f"\naccuracy  = {accuracy(counts):.4f}")
print(f"precision = {precision(counts):.4f}")
print(f"recall    = {recall(counts):.4f}")
print(f"f1        = {f1(counts):.4f}")

pairs = (
    [EvalPair(CHEATING, CHEATING)] * counts.tp
    + [EvalPair(CHEATING, NOT_CHEATING)] * counts.fn
    + [EvalPair(NOT_CHEATING, CHEATING)] * counts.fp
    + [EvalPair(NOT_CHEATING, NOT_CHEATING)] * counts.tn
)
print("\nfull classification report (rendered at 2 decimals):")
print(classification_report(pairs).render())

# Full-frame ablation rule: an image is 'cheating' as soon as any of its
# boxes is.
box = BBox(0, 0, 10, 10)
image_records = [
    HarmonizedRecord("room.png", box, NOT_CHEATING, "s"),
    HarmonizedRecord("room.png", box, CHEATING, "s"),
]
print(f"\nfull-frame label for a mixed image: {ablation_label(image_records).name}")
print(f"full-frame label for an empty image: {ablation_label([]).name}")
