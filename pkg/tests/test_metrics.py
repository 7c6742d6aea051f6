"""Metrics against hand-counted and brute-force oracles."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nser.errors import DataError, DimensionError
from nser.metrics import (
    ConfusionMatrix,
    accuracy,
    classification_report,
    edit_distance,
    f1,
    normalize_tokens,
    per_class_f1,
    uar,
    wer,
)


def exact_scores(counts) -> dict:
    """Closed-form UAR/F1 in exact rational arithmetic."""
    counts = [[int(v) for v in row] for row in counts]
    size = len(counts)
    support = [sum(row) for row in counts]
    predicted = [sum(counts[i][j] for i in range(size)) for j in range(size)]
    recalls = [Fraction(counts[i][i], support[i]) for i in range(size)]
    f1s = []
    for i in range(size):
        precision = (
            Fraction(counts[i][i], predicted[i]) if predicted[i] else Fraction(0)
        )
        denom = precision + recalls[i]
        f1s.append(2 * precision * recalls[i] / denom if denom else Fraction(0))
    total = sum(support)
    return {
        "uar": sum(recalls) / size,
        "f1_macro": sum(f1s) / size,
        "f1_weighted": sum(fi * si for fi, si in zip(f1s, support)) / total,
        "accuracy": Fraction(sum(counts[i][i] for i in range(size)), total),
    }


def naive_edit(a, b) -> int:
    """Exhaustive edit-script search; exponential, for short sequences only."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        naive_edit(a[1:], b) + 1,
        naive_edit(a, b[1:]) + 1,
        naive_edit(a[1:], b[1:]) + (a[0] != b[0]),
    )


class TestConfusionMatrix:
    def test_from_pairs(self):
        cm = ConfusionMatrix.from_pairs(
            ["a", "a", "b", "b"], ["a", "b", "b", "b"], ["a", "b"]
        )
        np.testing.assert_array_equal(cm.counts, [[1, 1], [0, 2]])

    def test_unknown_labels_rejected(self):
        with pytest.raises(DataError, match="true label"):
            ConfusionMatrix.from_pairs(["x"], ["a"], ["a", "b"])
        with pytest.raises(DataError, match="predicted label"):
            ConfusionMatrix.from_pairs(["a"], ["x"], ["a", "b"])

    def test_shape_validation(self):
        with pytest.raises(DimensionError, match="square"):
            ConfusionMatrix(np.zeros((2, 3), dtype=int), ["a", "b"])
        with pytest.raises(DimensionError, match="class names"):
            ConfusionMatrix(np.zeros((2, 2), dtype=int), ["a"])
        with pytest.raises(DataError, match="nonnegative"):
            ConfusionMatrix(np.array([[1, -1], [0, 1]]), ["a", "b"])


class TestUar:
    def test_perfect(self):
        cm = ConfusionMatrix(np.diag([5, 3, 9]), ["a", "b", "c"])
        assert uar(cm) == 1.0

    def test_hand_counted(self):
        # Class a: 4/4 recalled; class b: 3/6.
        cm = ConfusionMatrix(np.array([[4, 0], [3, 3]]), ["a", "b"])
        assert uar(cm) == pytest.approx(0.75, abs=1e-15)

    def test_duplicating_a_class_is_invariant(self):
        base = np.array([[8, 2, 0], [1, 5, 1], [0, 3, 6]])
        cm1 = ConfusionMatrix(base, ["a", "b", "c"])
        doubled = base.copy()
        doubled[1] *= 2
        cm2 = ConfusionMatrix(doubled, ["a", "b", "c"])
        assert uar(cm1) == pytest.approx(uar(cm2), abs=1e-15)

    def test_zero_support_is_error(self):
        cm = ConfusionMatrix(np.array([[3, 0], [0, 0]]), ["a", "b"])
        with pytest.raises(DataError, match="zero-support.*b"):
            uar(cm)

    def test_equals_accuracy_when_balanced(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            counts = rng.integers(0, 10, size=(3, 3))
            counts[:, 0] += 1  # keep support positive
            row_sums = counts.sum(axis=1)
            target = int(row_sums.max())
            # pad the diagonal so every row sums to the same support
            for i in range(3):
                counts[i, i] += target - row_sums[i]
            cm = ConfusionMatrix(counts, ["a", "b", "c"])
            assert abs(uar(cm) - accuracy(cm)) < 1e-12


class TestF1:
    def test_perfect_both_averagings(self):
        cm = ConfusionMatrix(np.diag([4, 4, 2]), ["a", "b", "c"])
        assert f1(cm, "macro") == 1.0
        assert f1(cm, "weighted") == 1.0

    def test_all_predictions_one_class(self):
        # Balanced 2-class, everything predicted 'a':
        # class a: P=0.5, R=1 -> F1 = 2/3; class b: 0. Macro = 1/3.
        cm = ConfusionMatrix(np.array([[5, 0], [5, 0]]), ["a", "b"])
        assert f1(cm, "macro") == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_balanced_supports_macro_equals_weighted(self):
        rng = np.random.default_rng(1)
        counts = rng.integers(1, 8, size=(4, 4))
        target = int(counts.sum(axis=1).max()) + 3
        for i in range(4):
            counts[i, i] += target - counts[i].sum()
        cm = ConfusionMatrix(counts, list("abcd"))
        assert abs(f1(cm, "macro") - f1(cm, "weighted")) < 1e-12

    def test_unknown_averaging(self):
        cm = ConfusionMatrix(np.diag([1, 1]), ["a", "b"])
        with pytest.raises(DataError, match="averaging"):
            f1(cm, "micro")

    def test_zero_support_is_error(self):
        cm = ConfusionMatrix(np.array([[3, 0], [0, 0]]), ["a", "b"])
        with pytest.raises(DataError, match="zero-support"):
            f1(cm, "macro")

    def test_closed_form_oracle_random_matrices(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            size = int(rng.integers(2, 6))
            counts = rng.integers(0, 12, size=(size, size))
            counts[np.arange(size), np.arange(size)] += 1  # positive support
            cm = ConfusionMatrix(counts, [f"k{i}" for i in range(size)])
            want = exact_scores(counts)
            assert abs(uar(cm) - float(want["uar"])) < 1e-12
            assert abs(f1(cm, "macro") - float(want["f1_macro"])) < 1e-12
            assert abs(f1(cm, "weighted") - float(want["f1_weighted"])) < 1e-12
            assert abs(accuracy(cm) - float(want["accuracy"])) < 1e-12

    def test_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            counts = rng.integers(0, 9, size=(3, 3))
            counts[np.arange(3), np.arange(3)] += 1
            cm = ConfusionMatrix(counts, ["a", "b", "c"])
            for value in (uar(cm), f1(cm, "macro"), f1(cm, "weighted")):
                assert 0.0 <= value <= 1.0


class TestNormalizeTokens:
    def test_basic(self):
        assert normalize_tokens("Hello, world!") == ("hello", "world")

    def test_empty(self):
        assert normalize_tokens("") == ()
        assert normalize_tokens("...!?") == ()

    def test_whitespace_variants_agree(self):
        a = normalize_tokens("one\ttwo\n three  four".replace(" ", " "))
        b = normalize_tokens("one two three four")
        assert a == b

    def test_punctuation_configurable(self):
        assert normalize_tokens("it's fine", punctuation="") == ("it's", "fine")
        assert normalize_tokens("it's fine") == ("its", "fine")


class TestWer:
    def test_identical(self):
        assert wer(("a", "b", "c"), ("a", "b", "c")) == 0.0

    def test_empty_hyp_all_deletions(self):
        assert wer(("a", "b"), ()) == 1.0

    def test_empty_ref_rejected(self):
        with pytest.raises(DataError, match="reference"):
            wer((), ("a",))

    def test_tripled_hyp_gives_two(self):
        ref = ("x", "y", "z")
        assert wer(ref, ref * 3) == 2.0

    def test_brute_force_oracle_short_pairs(self):
        rng = np.random.default_rng(4)
        alphabet = ["a", "b", "c"]
        for _ in range(120):
            ref = tuple(rng.choice(alphabet, size=int(rng.integers(1, 7))))
            hyp = tuple(rng.choice(alphabet, size=int(rng.integers(0, 7))))
            assert edit_distance(ref, hyp) == naive_edit(ref, hyp), (ref, hyp)

    def test_distance_symmetric_rates_not(self):
        rng = np.random.default_rng(5)
        alphabet = ["a", "b", "c", "d"]
        for _ in range(30):
            x = tuple(rng.choice(alphabet, size=int(rng.integers(1, 8))))
            y = tuple(rng.choice(alphabet, size=int(rng.integers(1, 8))))
            assert edit_distance(x, y) == edit_distance(y, x)
            if len(x) != len(y):
                assert wer(x, y) * len(x) == pytest.approx(wer(y, x) * len(y))

    def test_triangle_style_bound(self):
        rng = np.random.default_rng(6)
        alphabet = ["a", "b"]
        for _ in range(40):
            a, b, c = (
                tuple(rng.choice(alphabet, size=int(rng.integers(1, 7))))
                for _ in range(3)
            )
            lhs = wer(a, c) * len(a)
            rhs = wer(a, b) * len(a) + edit_distance(b, c)
            assert lhs <= rhs + 1e-12

    @given(
        st.lists(st.sampled_from("abc"), min_size=1, max_size=5),
        st.lists(st.sampled_from("abc"), max_size=5),
    )
    @settings(max_examples=60, deadline=None)
    def test_property_matches_naive(self, ref, hyp):
        assert edit_distance(ref, hyp) == naive_edit(tuple(ref), tuple(hyp))


class TestReport:
    def test_snapshot(self):
        cm = ConfusionMatrix(np.array([[4, 1], [2, 3]]), ["ang", "hap"])
        report = classification_report(cm)
        expected = (
            "uar\t0.7\n"
            "f1_weighted\t0.6969696969696969\n"
            "f1_macro\t0.6969696969696968\n"
            "accuracy\t0.7\n"
            "# confusion matrix: rows = true class, columns = predicted\n"
            "confusion\tclass\tang\thap\n"
            "confusion\tang\t4\t1\n"
            "confusion\thap\t2\t3\n"
        )
        assert report == expected

    def test_report_byte_stable(self):
        cm = ConfusionMatrix(np.array([[7, 0, 1], [1, 5, 0], [0, 2, 9]]), ["a", "b", "c"])
        assert classification_report(cm) == classification_report(cm)

    def test_per_class_f1_zero_when_never_predicted(self):
        cm = ConfusionMatrix(np.array([[0, 3], [0, 4]]), ["a", "b"])
        scores = per_class_f1(cm)
        assert scores[0] == 0.0
