"""Tests for src.eval.metrics and src.eval.report."""
import itertools

import numpy as np
import pytest

from src.core.errors import DataError, LabelError
from src.core.roles import parse_roles
from src.eval.metrics import (
    EvalReport, confusion_csv, dumps_confusion, evaluate, read_confusion_csv, read_report, write_report,
)
from src.eval.report import HEADER, percent, render_results_table


def brute_force(preds, labels, num_classes):
    """Counting oracle: accuracy, macro P/R/F1 over supported classes, row percentages."""
    n = len(labels)
    acc = sum(1 for p, t in zip(preds, labels) if p == t) / n
    ps, rs, fs = [], [], []
    rows = []
    for c in range(num_classes):
        tp = sum(1 for p, t in zip(preds, labels) if p == c and t == c)
        predicted = sum(1 for p in preds if p == c)
        support = sum(1 for t in labels if t == c)
        rows.append([100.0 * sum(1 for p, t in zip(preds, labels) if t == c and p == j) / support
                     if support else 0.0 for j in range(num_classes)])
        if support == 0:
            continue
        p = tp / predicted if predicted else 0.0
        r = tp / support
        ps.append(p)
        rs.append(r)
        fs.append(0.0 if p + r == 0 else 2 * p * r / (p + r))
    return acc, sum(ps) / len(ps), sum(rs) / len(rs), sum(fs) / len(fs), rows


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

class TestEvaluate:
    def test_hand_example(self):
        report = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        assert report.accuracy == 0.75
        assert report.per_class[0].precision == 1.0 and report.per_class[0].recall == 0.5
        assert report.per_class[1].precision == pytest.approx(2 / 3)
        assert report.f1 == pytest.approx((2 / 3 + 0.8) / 2, abs=1e-15)
        assert report.confusion == [[50.0, 50.0], [0.0, 100.0]]

    def test_exhaustive_two_class(self):
        for n in range(1, 7):
            for labels in itertools.product((0, 1), repeat=n):
                for preds in itertools.product((0, 1), repeat=n):
                    acc, p, r, f, rows = brute_force(preds, labels, 2)
                    report = evaluate(preds, labels, 2)
                    assert (report.accuracy, report.precision, report.recall, report.f1) == (acc, p, r, f)
                    assert report.confusion == rows

    def test_permutation_invariant(self, rng):
        preds, labels = rng.integers(0, 5, size=50), rng.integers(0, 5, size=50)
        order = rng.permutation(50)
        a, b = evaluate(preds, labels, 5), evaluate(preds[order], labels[order], 5)
        assert a == b

    def test_rows_sum_to_hundred_and_zero_support_flagged(self, rng):
        labels = rng.integers(0, 4, size=40)
        labels[labels == 2] = 1
        report = evaluate(rng.integers(0, 4, size=40), labels, 4)
        assert report.zero_support == [2]
        for c, row in enumerate(report.confusion):
            if c == 2:
                assert row == [0.0] * 4
            else:
                assert abs(sum(row) - 100.0) < 1e-9

    def test_matches_sklearn(self, rng):
        metrics = pytest.importorskip("sklearn.metrics")
        preds, labels = rng.integers(0, 3, size=80), rng.integers(0, 3, size=80)
        report = evaluate(preds, labels, 3)
        p, r, f, _ = metrics.precision_recall_fscore_support(labels, preds, labels=[0, 1, 2],
                                                             average="macro", zero_division=0)
        assert (report.precision, report.recall, report.f1) == pytest.approx((p, r, f), abs=1e-12)
        assert report.accuracy == pytest.approx(metrics.accuracy_score(labels, preds))

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            evaluate([0, 2], [0, 1], 2)

    def test_empty_and_mismatch(self):
        with pytest.raises(DataError):
            evaluate([], [], 2)
        with pytest.raises(DataError):
            evaluate([0], [0, 1], 2)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

class TestConfusionCsv:
    def test_cells(self):
        text = dumps_confusion(evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2), ["moldavian", "standard_romanian"])
        assert text.splitlines() == ["true\\pred,moldavian,standard_romanian",
                                     "moldavian,50.0,50.0", "standard_romanian,0.0,100.0"]

    def test_round_trip_within_formatting(self, tmp_path, rng):
        report = evaluate(rng.integers(0, 5, size=37), rng.integers(0, 5, size=37), 5)
        names = ["a", "b", "c", "d", "e"]
        confusion_csv(report, names, tmp_path / "c.csv")
        read_names, matrix = read_confusion_csv(tmp_path / "c.csv")
        assert read_names == names
        assert np.max(np.abs(np.array(matrix) - np.array(report.confusion))) <= 0.05

    def test_name_count(self):
        with pytest.raises(DataError):
            dumps_confusion(evaluate([0], [0], 2), ["only"])


class TestReportJson:
    def test_round_trip_with_extra(self, tmp_path):
        report = evaluate([0, 1, 1], [0, 1, 0], 2)
        write_report(report, tmp_path / "r.json", model="base", roles="↑ ✗ ✗")
        back, extra = read_report(tmp_path / "r.json")
        assert back == report
        assert extra == {"model": "base", "roles": "↑ ✗ ✗"}

    def test_from_dict(self):
        report = evaluate([0, 0], [0, 1], 2)
        assert EvalReport.from_dict(report.to_dict()) == report


# ---------------------------------------------------------------------------
# Results table
# ---------------------------------------------------------------------------

class TestResultsTable:
    def test_rows(self):
        report = evaluate([0, 1, 1, 1], [0, 0, 1, 1], 2)
        table = render_results_table([("base", parse_roles("↑ ✗ ✗"), report),
                                      ("adv", parse_roles("↑ ↓ ↓"), report)])
        lines = table.splitlines()
        assert [c.strip() for c in lines[0].split("|")] == list(HEADER)
        assert [c.strip() for c in lines[3].split("|")] == ["adv", "↑", "↓", "↓", "75.00", "83.33", "75.00", "73.33"]

    def test_percent(self):
        assert percent(0.78214) == "78.21"
