import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proctorpipe import (
    CHEATING,
    ConfusionCounts,
    EvalPair,
    NOT_CHEATING,
    ablation_label,
    accuracy,
    classification_report,
    confusion_from_pairs,
    f1,
    precision,
    recall,
)
from proctorpipe.errors import EmptyEvaluation
from proctorpipe.evalkit import UndefinedMetricWarning, confusion_csv
from proctorpipe.types import ClassLabel


# random degenerate counts legitimately trigger the zero-division convention
pytestmark = pytest.mark.filterwarnings("ignore::proctorpipe.evalkit.UndefinedMetricWarning")


def pairs_from_counts(tp, tn, fp, fn):
    out = []
    out += [EvalPair(CHEATING, CHEATING)] * tp
    out += [EvalPair(NOT_CHEATING, NOT_CHEATING)] * tn
    out += [EvalPair(NOT_CHEATING, CHEATING)] * fp
    out += [EvalPair(CHEATING, NOT_CHEATING)] * fn
    return out


# Confusion counts published alongside the reference evaluation:
# 1,672 of 1,838 positives identified, 166 missed, 152 false alarms,
# supports 1,838 / 5,057.
REF = ConfusionCounts(tp=1672, tn=4905, fp=152, fn=166)


class TestScalarMetrics:
    def test_accuracy_reference_counts(self):
        assert accuracy(REF) == pytest.approx(6577 / 6895)
        assert accuracy(REF) == pytest.approx(0.9539, abs=5e-5)

    def test_accuracy_perfect_and_zero(self):
        assert accuracy(ConfusionCounts(1, 1, 0, 0)) == 1.0
        assert accuracy(ConfusionCounts(0, 0, 1, 1)) == 0.0

    def test_accuracy_empty_raises(self):
        with pytest.raises(EmptyEvaluation):
            accuracy(ConfusionCounts(0, 0, 0, 0))

    def test_precision_reference_counts(self):
        assert precision(REF) == pytest.approx(1672 / 1824)
        assert precision(REF) == pytest.approx(0.9167, abs=5e-5)

    def test_recall_reference_counts(self):
        assert recall(REF) == pytest.approx(1672 / 1838)
        assert recall(REF) == pytest.approx(0.9097, abs=5e-5)

    def test_f1_reference_counts(self):
        p, r = precision(REF), recall(REF)
        assert f1(REF) == pytest.approx(2 * p * r / (p + r))
        assert f1(REF) == pytest.approx(0.9132, abs=5e-5)

    def test_zero_denominator_convention(self):
        counts = ConfusionCounts(tp=0, tn=5, fp=0, fn=0)
        with pytest.warns(UndefinedMetricWarning):
            assert precision(counts) == 0.0
        with pytest.warns(UndefinedMetricWarning):
            assert recall(counts) == 0.0

    def test_f1_degenerate_cases(self):
        assert f1(ConfusionCounts(tp=5, tn=0, fp=0, fn=0)) == 1.0
        # P = 1, R = 0 -> harmonic mean 0
        with pytest.warns(UndefinedMetricWarning):
            assert f1(ConfusionCounts(tp=0, tn=1, fp=0, fn=3)) == 0.0

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            ConfusionCounts(-1, 0, 0, 0)


class TestClassificationReport:
    def test_reference_macro_rows(self):
        report = classification_report(pairs_from_counts(1672, 4905, 152, 166))
        cheat = report.per_class["cheating"]
        clean = report.per_class["not_cheating"]
        assert cheat.support == 1838
        assert clean.support == 5057
        assert round(clean.precision, 2) == 0.97
        assert round(clean.recall, 2) == 0.97
        assert round(clean.f1, 2) == 0.97
        assert round(report.macro_avg.precision, 2) == 0.94
        assert round(report.macro_avg.recall, 2) == 0.94
        assert round(report.macro_avg.f1, 2) == 0.94
        assert round(report.weighted_avg.precision, 2) == 0.95
        assert report.accuracy == pytest.approx(6577 / 6895)

    def test_all_correct(self):
        report = classification_report(pairs_from_counts(3, 4, 0, 0))
        for row in report.per_class.values():
            assert (row.precision, row.recall, row.f1) == (1.0, 1.0, 1.0)
        assert report.accuracy == 1.0
        assert report.macro_avg.f1 == 1.0

    def test_hand_enumerated_six_pairs(self):
        # 4 correct not_cheating, 1 correct cheating, 1 cheating missed
        pairs = pairs_from_counts(tp=1, tn=4, fp=0, fn=1)
        report = classification_report(pairs)
        cheat = report.per_class["cheating"]
        assert cheat.recall == pytest.approx(0.5)
        assert cheat.precision == pytest.approx(1.0)
        assert cheat.f1 == pytest.approx(2 / 3)
        assert report.accuracy == pytest.approx(5 / 6)

    def test_empty_raises(self):
        with pytest.raises(EmptyEvaluation):
            classification_report([])

    def test_render_two_decimals(self):
        report = classification_report(pairs_from_counts(1, 4, 0, 1))
        text = report.render()
        assert "0.50" in text  # cheating recall
        assert "not_cheating" in text and "cheating" in text
        assert "macro avg" in text and "weighted avg" in text

    def test_supports_equal_one_vs_rest_tp_plus_fn(self):
        rng = random.Random(5)
        for _ in range(50):
            pairs = pairs_from_counts(*(rng.randint(0, 20) for _ in range(4)))
            if not pairs:
                continue
            report = classification_report(pairs)
            truth_counts = {
                "cheating": sum(1 for p in pairs if p.truth.id == 1),
                "not_cheating": sum(1 for p in pairs if p.truth.id == 0),
            }
            for name, row in report.per_class.items():
                assert row.support == truth_counts[name]


def brute_force_report(pairs):
    """Count-and-divide reference, built separately from the implementation."""
    out = {}
    for positive in (0, 1):
        tp = sum(1 for p in pairs if p.truth.id == positive and p.predicted.id == positive)
        pred_pos = sum(1 for p in pairs if p.predicted.id == positive)
        true_pos = sum(1 for p in pairs if p.truth.id == positive)
        prec = tp / pred_pos if pred_pos else 0.0
        rec = tp / true_pos if true_pos else 0.0
        h = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[positive] = (prec, rec, h, true_pos)
    acc = sum(1 for p in pairs if p.truth.id == p.predicted.id) / len(pairs)
    return out, acc


class TestReportProperties:
    @given(counts=st.tuples(*[st.integers(0, 15) for _ in range(4)]))
    @settings(max_examples=200)
    def test_matches_brute_force_oracle(self, counts):
        pairs = pairs_from_counts(*counts)
        if not pairs:
            return
        report = classification_report(pairs)
        ref, ref_acc = brute_force_report(pairs)
        for label_id, name in ((0, "not_cheating"), (1, "cheating")):
            row = report.per_class[name]
            prec, rec, h, support = ref[label_id]
            assert row.precision == pytest.approx(prec)
            assert row.recall == pytest.approx(rec)
            assert row.f1 == pytest.approx(h)
            assert row.support == support
        assert report.accuracy == pytest.approx(ref_acc)

    @given(counts=st.tuples(*[st.integers(0, 50) for _ in range(4)]))
    @settings(max_examples=200)
    def test_accuracy_is_weighted_mean_recall(self, counts):
        pairs = pairs_from_counts(*counts)
        if not pairs:
            return
        report = classification_report(pairs)
        assert abs(report.accuracy - report.weighted_avg.recall) < 1e-12

    @given(counts=st.tuples(*[st.integers(0, 50) for _ in range(4)]))
    @settings(max_examples=200)
    def test_f1_bounds(self, counts):
        c = ConfusionCounts(*counts)
        if c.total == 0:
            return
        p, r, h = precision(c), recall(c), f1(c)
        if p + r > 0:
            assert min(p, r) - 1e-12 <= h <= max(p, r) + 1e-12
            assert h <= math.sqrt(p * r) + 1e-12

    @given(counts=st.tuples(*[st.integers(0, 30) for _ in range(4)]))
    @settings(max_examples=100)
    def test_relabeling_symmetry(self, counts):
        tp, tn, fp, fn = counts
        pairs = pairs_from_counts(tp, tn, fp, fn)
        if not pairs:
            return
        flipped = [
            EvalPair(ClassLabel(1 - p.truth.id), ClassLabel(1 - p.predicted.id))
            for p in pairs
        ]
        a = classification_report(pairs)
        b = classification_report(flipped)
        assert a.accuracy == pytest.approx(b.accuracy)
        assert a.macro_avg.precision == pytest.approx(b.macro_avg.precision)
        assert a.per_class["cheating"] == b.per_class["not_cheating"]
        assert a.per_class["not_cheating"] == b.per_class["cheating"]


def rec(label):
    class _R:
        def __init__(self, l):
            self.label = l

    return _R(label)


class TestAblationLabel:
    def test_any_cheating_wins(self):
        assert ablation_label([rec(NOT_CHEATING), rec(CHEATING), rec(NOT_CHEATING)]) == CHEATING

    def test_empty_is_not_cheating(self):
        assert ablation_label([]) == NOT_CHEATING

    def test_all_clean(self):
        assert ablation_label([rec(NOT_CHEATING)] * 5) == NOT_CHEATING


class TestConfusionHelpers:
    def test_confusion_from_pairs(self):
        counts = confusion_from_pairs(pairs_from_counts(3, 4, 2, 1))
        assert (counts.tp, counts.tn, counts.fp, counts.fn) == (3, 4, 2, 1)

    def test_csv_layout(self):
        text = confusion_csv(ConfusionCounts(tp=3, tn=4, fp=2, fn=1))
        lines = text.splitlines()
        assert lines[0] == ",predicted_not_cheating,predicted_cheating"
        assert lines[1] == "true_not_cheating,4,2"
        assert lines[2] == "true_cheating,1,3"
