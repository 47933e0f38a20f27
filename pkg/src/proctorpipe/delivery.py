"""Per-student outcome aggregation and private report delivery.

Verdicts are bound to students through a static seat map (camera-frame
regions), never through identity recognition. Each student receives an
individual message file that mentions no one else; the default transport
writes RFC 5322 text files into an outbox directory.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from email.message import EmailMessage
from email.utils import formatdate
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

from .classify import BehaviorVerdict
from .errors import IoFailure
from .pipeline import FrameResult
from .types import BBox, iou

MIN_ASSIGN_IOU = 0.1


@dataclass(frozen=True)
class SeatEntry:
    region: BBox
    student_id: str
    contact: str


@dataclass(frozen=True)
class SeatMap:
    entries: Tuple[SeatEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.student_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("student_ids must be unique")
        for i, a in enumerate(self.entries):
            for b in self.entries[i + 1 :]:
                overlap = iou(a.region, b.region)
                if overlap > MIN_ASSIGN_IOU:
                    raise ValueError(
                        f"seat regions {a.student_id} and {b.student_id} overlap "
                        f"(IoU {overlap:.3f} > {MIN_ASSIGN_IOU})"
                    )

    def contacts(self) -> Dict[str, str]:
        return {e.student_id: e.contact for e in self.entries}

    @classmethod
    def from_json(cls, rows: Sequence[Mapping]) -> "SeatMap":
        return cls(
            entries=tuple(
                SeatEntry(
                    region=BBox(
                        float(r["x1"]), float(r["y1"]), float(r["x2"]), float(r["y2"])
                    ),
                    student_id=str(r["student_id"]),
                    contact=str(r["contact"]),
                )
                for r in rows
            )
        )


def assign_to_seat(verdict: BehaviorVerdict, seat_map: SeatMap) -> Optional[str]:
    """Seat whose region best overlaps the verdict box, or None.

    Requires IoU >= 0.1; argmax ties break toward the lowest seat index.
    """
    best_id = None
    best_iou = 0.0
    for entry in seat_map.entries:
        overlap = iou(verdict.bbox, entry.region)
        if overlap >= MIN_ASSIGN_IOU and overlap > best_iou:
            best_id = entry.student_id
            best_iou = overlap
    return best_id


@dataclass(frozen=True)
class StudentOutcome:
    """Aggregate over all frames for one student.

    n_frames counts frame observations assigned to the seat; n_cheating
    counts how many of those carried a cheating verdict.
    """

    student_id: str
    n_frames: int
    n_cheating: int
    max_prob: float
    decision: str  # "flagged" | "clear"


@dataclass(frozen=True)
class UnassignedTally:
    n_verdicts: int
    n_cheating: int


def aggregate(
    results: Sequence[FrameResult], seat_map: SeatMap, flag_count: int = 1
) -> Tuple[List[StudentOutcome], UnassignedTally]:
    """Tally verdicts per seat; verdicts matching no seat are reported apart.

    A student is flagged once their cheating count reaches flag_count.
    """
    frames: Dict[str, int] = {e.student_id: 0 for e in seat_map.entries}
    cheating: Dict[str, int] = {e.student_id: 0 for e in seat_map.entries}
    max_prob: Dict[str, float] = {e.student_id: 0.0 for e in seat_map.entries}
    unassigned = 0
    unassigned_cheating = 0
    for result in results:
        for verdict in result.verdicts:
            student = assign_to_seat(verdict, seat_map)
            if student is None:
                unassigned += 1
                unassigned_cheating += verdict.label.id
                continue
            frames[student] += 1
            cheating[student] += verdict.label.id
            max_prob[student] = max(max_prob[student], verdict.prob_cheating)
    outcomes = [
        StudentOutcome(
            student_id=entry.student_id,
            n_frames=frames[entry.student_id],
            n_cheating=cheating[entry.student_id],
            max_prob=max_prob[entry.student_id],
            decision="flagged" if cheating[entry.student_id] >= flag_count else "clear",
        )
        for entry in seat_map.entries
    ]
    return outcomes, UnassignedTally(n_verdicts=unassigned, n_cheating=unassigned_cheating)


class MessageSink(Protocol):
    def deliver(self, student_id: str, contact: str, subject: str, body: str) -> None: ...


class FileOutboxSink:
    """Writes one .eml per student via temp file + atomic rename."""

    def __init__(self, outbox: Path):
        self.outbox = Path(outbox)

    def deliver(self, student_id: str, contact: str, subject: str, body: str) -> None:
        msg = EmailMessage()
        msg["To"] = contact
        msg["Subject"] = subject
        msg["Date"] = formatdate(localtime=True)
        msg.set_content(body)
        target = self.outbox / f"{student_id}.eml"
        fd, tmp_path = tempfile.mkstemp(dir=self.outbox, prefix=".tmp-", suffix=".eml")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(msg.as_bytes())
            os.replace(tmp_path, target)
        except BaseException:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise


def render_report_body(outcome: StudentOutcome) -> str:
    """Plain-text body describing only this student's outcome."""
    lines = [
        "Exam monitoring summary",
        "",
        f"Student: {outcome.student_id}",
        f"Frames observed: {outcome.n_frames}",
        f"Frames with a cheating verdict: {outcome.n_cheating}",
        f"Highest cheating probability: {outcome.max_prob:.2f}",
        f"Decision: {outcome.decision}",
        "",
    ]
    if outcome.decision == "flagged":
        lines.append(
            "This result was flagged for review. It is shared only with you; "
            "please contact the examination office if you wish to discuss it."
        )
    else:
        lines.append("No irregularities were recorded for you.")
    return "\n".join(lines)


def emit_reports(
    outcomes: Sequence[StudentOutcome],
    outbox,
    contacts: Mapping[str, str],
    sink: Optional[MessageSink] = None,
) -> int:
    """Emit one private message per student; returns the count written.

    Every message is addressed to exactly one student and contains no
    other student's identifier. Failures are collected across students
    and raised together as IoFailure; completed files are never partial
    thanks to the temp-file + rename protocol.
    """
    outbox = Path(outbox)
    if sink is None:
        try:
            outbox.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure([(str(outbox), str(exc))]) from exc
        sink = FileOutboxSink(outbox)
    written = 0
    failures: List[Tuple[str, str]] = []
    for outcome in outcomes:
        contact = contacts.get(outcome.student_id, "")
        try:
            if not contact:
                raise KeyError(f"no contact for {outcome.student_id}")
            sink.deliver(
                outcome.student_id,
                contact,
                subject=f"Exam monitoring result for {outcome.student_id}",
                body=render_report_body(outcome),
            )
            written += 1
        except Exception as exc:
            failures.append((outcome.student_id, str(exc)))
    if failures:
        raise IoFailure(failures)
    return written
