import pytest

import numpy as np
from hypothesis import given
from hypothesis.extra.numpy import arrays

from pyDlo.errors import DimensionMismatchError
from pyDlo.evaluation.metrics import (DiceReport, crossing_accuracy, dice,
                                      evaluate, evaluate_masks)
from pyDlo.processing.pipeline import Crossing
from pyDlo.processing.tracer import CenterlinePath, DloInstance


def _box(shape, rows, cols):
    mask = np.zeros(shape, dtype=bool)
    mask[rows, cols] = True
    return mask


A = _box((20, 20), slice(0, 5), slice(0, 10))  # 50 px
B = _box((20, 20), slice(0, 10), slice(0, 10))  # 100 px, contains A
C = _box((20, 20), slice(15, 20), slice(15, 20))


class TestDice:

    def test_examples(self):
        assert dice(B, B) == 1.0
        assert dice(A, C) == 0.0
        assert dice(A, B) == pytest.approx(100 / 150, abs=1e-9)

    @given(arrays(bool, (12, 12)), arrays(bool, (12, 12)))
    def test_symmetric_and_bounded(self, a, b):
        assert dice(a, b) == dice(b, a)
        assert 0.0 <= dice(a, b) <= 1.0

    def test_both_empty(self):
        empty = np.zeros((4, 4), dtype=bool)
        assert dice(empty, empty) == 1.0
        assert dice(empty, B[:4, :4]) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dice(A, A[:10])


class TestEvaluateMasks:

    def test_permutation_invariant(self):
        report = evaluate_masks([C, B], [B, C])
        assert report.mean == 1.0
        assert sorted(report.matches) == [(1, 2), (2, 1)]
        assert report.truth_of(1) == 2

    def test_missed_truth(self):
        report = evaluate_masks([B], [B, C])
        assert report.mean == pytest.approx(0.5)
        assert report.unmatched_truths == 1
        assert report.unmatched_predictions == 0

    def test_no_predictions(self):
        report = evaluate_masks([], [B, C])
        assert report.mean == 0.0
        assert report.scores == [0.0, 0.0]
        assert report.unmatched_truths == 2

    def test_spurious_prediction(self):
        junk = _box((20, 20), slice(12, 14), slice(0, 3))
        report = evaluate_masks([B, junk, C], [B, C])
        assert report.scores == [1.0, 1.0, 0.0]
        assert report.unmatched_predictions == 1
        assert report.truth_of(2) is None

    def test_greedy_takes_best_first(self):
        report = evaluate_masks([A, B], [B])
        assert report.matches == [(2, 1)]
        assert report.scores == [1.0, 0.0]

    def test_empty_report(self):
        report = DiceReport([], [], 0, 0)
        assert report.mean == 1.0 and report.std == 0.0
        assert evaluate_masks([], []).mean == 1.0

    def test_to_dict(self):
        doc = evaluate_masks([A], [B]).to_dict()
        assert doc['mean'] == pytest.approx(0.666667)
        assert doc['matches'] == [[1, 1]]
        assert doc['unmatched_truths'] == 0


def _instance(k, mask):
    return DloInstance(k, CenterlinePath([], []), np.zeros(0), mask)


def test_evaluate_instances(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    preds = [_instance(1, scene.masks[1]), _instance(2, scene.masks[0])]
    report = evaluate(preds, scene)
    assert report.mean == 1.0
    assert report.truth_of(1) == 2


def test_crossing_accuracy(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    preds = [_instance(1, scene.masks[1]), _instance(2, scene.masks[0])]
    report = evaluate(preds, scene)

    # prediction 1 is truth 2, which was painted last
    right = Crossing((60, 60), (1, 2), top=1)
    wrong = Crossing((60, 60), (2, 1), top=2)
    unknown = Crossing((60, 60), (1, 2), top=None)
    self_crossing = Crossing((60, 60), (1, 1), top=1)

    assert crossing_accuracy([right], report, scene) == (1, 1)
    assert crossing_accuracy([right, wrong], report, scene) == (1, 2)
    assert crossing_accuracy([unknown, self_crossing], report, scene) == (0, 0)
