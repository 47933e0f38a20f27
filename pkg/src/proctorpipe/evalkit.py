"""Confusion-matrix accounting and classification reports.

The positive class for headline metrics is cheating (id 1). Metrics with
vanishing denominators are defined as 0.0 and flagged with a warning, so
reports stay total over any pair set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import EmptyEvaluation
from .types import CHEATING, NOT_CHEATING, ClassLabel


class UndefinedMetricWarning(UserWarning):
    """A metric denominator was zero; the value was defined as 0.0."""


@dataclass(frozen=True)
class ConfusionCounts:
    """2x2 tally; positive class = cheating."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class EvalPair:
    truth: ClassLabel
    predicted: ClassLabel
    frame_id: str = ""


def confusion_from_pairs(pairs: Sequence[EvalPair]) -> ConfusionCounts:
    tp = sum(1 for p in pairs if p.truth.id == 1 and p.predicted.id == 1)
    tn = sum(1 for p in pairs if p.truth.id == 0 and p.predicted.id == 0)
    fp = sum(1 for p in pairs if p.truth.id == 0 and p.predicted.id == 1)
    fn = sum(1 for p in pairs if p.truth.id == 1 and p.predicted.id == 0)
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int, what: str) -> float:
    if den == 0:
        warnings.warn(f"{what} undefined (zero denominator); using 0.0", UndefinedMetricWarning)
        return 0.0
    return num / den


def accuracy(c: ConfusionCounts) -> float:
    """(TP + TN) / total."""
    if c.total == 0:
        raise EmptyEvaluation("accuracy over zero instances")
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float:
    """TP / (TP + FP); 0.0 when no positive predictions exist."""
    return _ratio(c.tp, c.tp + c.fp, "precision")


def recall(c: ConfusionCounts) -> float:
    """TP / (TP + FN); 0.0 when no positive instances exist."""
    return _ratio(c.tp, c.tp + c.fn, "recall")


def f1(c: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; 0.0 when both vanish."""
    p = precision(c)
    r = recall(c)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: Dict[str, ClassMetrics]
    accuracy: float
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics

    def to_dict(self) -> Dict:
        def row(m: ClassMetrics) -> Dict:
            return {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }

        return {
            "per_class": {name: row(m) for name, m in self.per_class.items()},
            "accuracy": self.accuracy,
            "macro_avg": row(self.macro_avg),
            "weighted_avg": row(self.weighted_avg),
        }

    def render(self) -> str:
        """Two-decimal text table in the usual report layout."""
        lines = [f"{'':>14} {'precision':>9} {'recall':>9} {'f1-score':>9} {'support':>9}"]
        for name in (NOT_CHEATING.name, CHEATING.name):
            m = self.per_class[name]
            lines.append(
                f"{name:>14} {m.precision:>9.2f} {m.recall:>9.2f} {m.f1:>9.2f} {m.support:>9}"
            )
        total = self.macro_avg.support
        lines.append(f"{'accuracy':>14} {'':>9} {'':>9} {self.accuracy:>9.2f} {total:>9}")
        for name, m in (("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)):
            lines.append(
                f"{name:>14} {m.precision:>9.2f} {m.recall:>9.2f} {m.f1:>9.2f} {m.support:>9}"
            )
        return "\n".join(lines)


def _one_vs_rest(pairs: Sequence[EvalPair], positive: ClassLabel) -> ConfusionCounts:
    tp = sum(1 for p in pairs if p.truth.id == positive.id and p.predicted.id == positive.id)
    fn = sum(1 for p in pairs if p.truth.id == positive.id and p.predicted.id != positive.id)
    fp = sum(1 for p in pairs if p.truth.id != positive.id and p.predicted.id == positive.id)
    tn = len(pairs) - tp - fn - fp
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def classification_report(pairs: Sequence[EvalPair]) -> MetricsReport:
    """Per-class, macro, and support-weighted metrics over labeled pairs."""
    if not pairs:
        raise EmptyEvaluation("classification report over zero pairs")
    per_class: Dict[str, ClassMetrics] = {}
    rows: List[ClassMetrics] = []
    for label in (NOT_CHEATING, CHEATING):
        counts = _one_vs_rest(pairs, label)
        row = ClassMetrics(
            precision=precision(counts),
            recall=recall(counts),
            f1=f1(counts),
            support=counts.tp + counts.fn,
        )
        per_class[label.name] = row
        rows.append(row)
    total = len(pairs)
    macro = ClassMetrics(
        precision=sum(r.precision for r in rows) / len(rows),
        recall=sum(r.recall for r in rows) / len(rows),
        f1=sum(r.f1 for r in rows) / len(rows),
        support=total,
    )
    weighted = ClassMetrics(
        precision=sum(r.precision * r.support for r in rows) / total,
        recall=sum(r.recall * r.support for r in rows) / total,
        f1=sum(r.f1 * r.support for r in rows) / total,
        support=total,
    )
    overall = sum(1 for p in pairs if p.truth.id == p.predicted.id) / total
    return MetricsReport(
        per_class=per_class, accuracy=overall, macro_avg=macro, weighted_avg=weighted
    )


def ablation_label(records: Sequence) -> ClassLabel:
    """Full-frame label rule: cheating iff any record is labeled cheating.

    Zero records yield not_cheating (vacuously nothing suspicious).
    """
    for record in records:
        if record.label.id == 1:
            return CHEATING
    return NOT_CHEATING


def confusion_csv(c: ConfusionCounts) -> str:
    """2x2 matrix as CSV: rows = truth, columns = predicted."""
    return "\n".join(
        [
            f",predicted_{NOT_CHEATING.name},predicted_{CHEATING.name}",
            f"true_{NOT_CHEATING.name},{c.tn},{c.fp}",
            f"true_{CHEATING.name},{c.fn},{c.tp}",
        ]
    )
