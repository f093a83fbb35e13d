"""Tests for src.corpus.agreement: quadratic weighted kappa."""
import numpy as np
import pytest

from src.core.errors import ConfigError, DataError, UndefinedMetricError
from src.corpus.agreement import RaterTable, percent_agreement, qwk, read_rater_csv


def reference_qwk(o):
    """Plain-loop kappa over a joint histogram."""
    k = len(o)
    n = sum(sum(row) for row in o)
    row_tot = [sum(o[i]) for i in range(k)]
    col_tot = [sum(o[i][j] for i in range(k)) for j in range(k)]
    num = den = 0.0
    for i in range(k):
        for j in range(k):
            w = (i - j) ** 2 / (k - 1) ** 2
            num += w * o[i][j]
            den += w * row_tot[i] * col_tot[j] / n
    return 1 - num / den


class TestQwk:
    def test_perfect_agreement(self, rng):
        for k in (2, 3, 5):
            ratings = rng.integers(0, k, size=40)
            ratings[:k] = np.arange(k)
            table = RaterTable(k, [(str(i), int(r), int(r)) for i, r in enumerate(ratings)])
            assert qwk(table) == 1.0

    def test_independence(self):
        assert abs(qwk(RaterTable.from_matrix([[25, 25], [25, 25]]))) < 1e-12

    def test_three_class_reference(self):
        o = [[30, 5, 0], [4, 40, 6], [0, 5, 10]]
        assert qwk(RaterTable.from_matrix(o)) == pytest.approx(reference_qwk(o), abs=1e-12)

    def test_matches_sklearn(self, rng):
        metrics = pytest.importorskip("sklearn.metrics")
        a = rng.integers(0, 4, size=60)
        b = np.clip(a + rng.integers(-1, 2, size=60), 0, 3)
        table = RaterTable(4, [(str(i), int(x), int(y)) for i, (x, y) in enumerate(zip(a, b))])
        expected = metrics.cohen_kappa_score(a, b, weights="quadratic", labels=[0, 1, 2, 3])
        assert qwk(table) == pytest.approx(expected, abs=1e-12)

    def test_bounds_and_order_invariance(self, rng):
        for _ in range(30):
            items = [(str(i), int(rng.integers(3)), int(rng.integers(3))) for i in range(20)]
            items[0] = ("0", 0, 2)
            value = qwk(RaterTable(3, items))
            assert -1.0 <= value <= 1.0
            shuffled = [items[i] for i in rng.permutation(len(items))]
            assert qwk(RaterTable(3, shuffled)) == pytest.approx(value, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(UndefinedMetricError):
            qwk(RaterTable(3, [("a", 1, 1), ("b", 1, 1)]))

    def test_rating_out_of_range(self):
        with pytest.raises(DataError):
            qwk(RaterTable(3, [("a", 0, 3)]))

    def test_one_class(self):
        with pytest.raises(ConfigError):
            qwk(RaterTable(1, [("a", 0, 0)]))


class TestPercentAgreement:
    def test_value(self):
        table = RaterTable(3, [("a", 0, 0), ("b", 1, 2), ("c", 2, 2), ("d", 0, 1)])
        assert percent_agreement(table) == 0.5


class TestRaterCsv:
    def test_read(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("item_id,rating_a,rating_b\nx,0,1\ny,2,2\n", encoding="utf-8")
        table = read_rater_csv(path, 3)
        assert table.items == [("x", 0, 1), ("y", 2, 2)]

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("item_id,rating_a,rating_b\nx,zero,1\n", encoding="utf-8")
        with pytest.raises(DataError):
            read_rater_csv(path, 3)
