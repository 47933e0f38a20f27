"""Private per-student outcome delivery.

Verdicts are bound to students by a static seat map (no identity
recognition), aggregated into one outcome per student, and written as
individual message files: each student's file names no one else.
"""

import tempfile
from pathlib import Path

from proctorpipe import (
    BBox,
    BehaviorVerdict,
    CHEATING,
    NOT_CHEATING,
    SeatEntry,
    SeatMap,
    aggregate,
    emit_reports,
)


class Frame:
    def __init__(self, verdicts):
        self.verdicts = verdicts


def verdict(label, prob, box):
    return BehaviorVerdict(label=label, prob_cheating=prob,
                           prob_not_cheating=1 - prob, bbox=box)


seats = SeatMap(
    entries=(
        SeatEntry(BBox(50, 100, 250, 400), "st-2031", "st-2031@uni.example"),
        SeatEntry(BBox(350, 100, 550, 400), "st-2045", "st-2045@uni.example"),
        SeatEntry(BBox(650, 100, 850, 400), "st-2077", "st-2077@uni.example"),
    )
)

# Three frames of verdicts: the middle seat is flagged twice.
frames = [
    Frame([
        verdict(NOT_CHEATING, 0.08, BBox(60, 110, 240, 390)),
        verdict(CHEATING, 0.93, BBox(360, 120, 540, 395)),
    ]),
    Frame([
        verdict(CHEATING, 0.88, BBox(355, 115, 545, 390)),
        verdict(NOT_CHEATING, 0.12, BBox(655, 105, 845, 400)),
    ]),
    Frame([verdict(NOT_CHEATING, 0.15, BBox(58, 102, 245, 398))]),
]

outcomes, unassigned = aggregate(frames, seats)
for outcome in outcomes:
    print(f"{outcome.student_id}: observed {outcome.n_frames}x, "
          f"cheating verdicts {outcome.n_cheating}, "
          f"max p(cheating) {outcome.max_prob:.2f} -> {outcome.decision}")
print(f"unassigned verdicts: {unassigned.n_verdicts}")

with tempfile.TemporaryDirectory() as tmp:
    outbox = Path(tmp) / "outbox"
    written = emit_reports(outcomes, outbox, seats.contacts())
    print(f"\nwrote {written} private reports:")
    for path in sorted(outbox.iterdir()):
        print(f"  {path.name}")
    print("\n--- contents of the flagged student's message ---")
    print((outbox / "st-2045.eml").read_text())
