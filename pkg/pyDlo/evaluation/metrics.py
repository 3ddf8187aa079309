"""
    DICE scoring of predicted instances against ground truth

    Predictions and truths are matched greedily by descending DICE (ties by
    prediction then truth index). The report averages over
    max(#truths, #predictions) entries: every unmatched truth and every
    unmatched prediction contributes a 0.
"""
from __future__ import annotations

import typing as typ

import dataclasses

import numpy as np
import numpy.typing as npt

from pyDlo.errors import DimensionMismatchError
from pyDlo.evaluation.scene_gen import SyntheticScene
from pyDlo.processing.pipeline import Crossing
from pyDlo.processing.tracer import DloInstance


def dice(a: npt.NDArray[np.bool_], b: npt.NDArray[np.bool_]) -> float:
    """
        2 |a & b| / (|a| + |b|); 1.0 for two empty masks.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatchError(
                f'cannot compare masks of shape {a.shape} and {b.shape}',
                stage='evaluation')
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(a & b)) / total


@dataclasses.dataclass
class DiceReport:
    scores: list[float]
    # (prediction id, truth id) per matched pair, ids from 1
    matches: list[typ.Tuple[int, int]]
    unmatched_predictions: int
    unmatched_truths: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores)) if self.scores else 1.0

    @property
    def std(self) -> float:
        return float(np.std(self.scores)) if self.scores else 0.0

    def truth_of(self, prediction_id: int) -> int | None:
        return dict(self.matches).get(prediction_id)

    def to_dict(self) -> dict[str, typ.Any]:
        return dict(scores=[round(s, 6) for s in self.scores],
                    matches=[list(m) for m in self.matches],
                    mean=round(self.mean, 6), std=round(self.std, 6),
                    unmatched_predictions=self.unmatched_predictions,
                    unmatched_truths=self.unmatched_truths)


def evaluate_masks(
        predictions: typ.Sequence[npt.NDArray[np.bool_]],
        truths: typ.Sequence[npt.NDArray[np.bool_]]) -> DiceReport:
    pairs = []
    for i, pred in enumerate(predictions):
        for j, truth in enumerate(truths):
            score = dice(pred, truth)
            if score > 0.0:
                pairs.append((-score, i, j))
    pairs.sort()

    used_pred: set[int] = set()
    used_truth: set[int] = set()
    scores = []
    matches = []
    for neg_score, i, j in pairs:
        if i in used_pred or j in used_truth:
            continue
        used_pred.add(i)
        used_truth.add(j)
        scores.append(-neg_score)
        matches.append((i + 1, j + 1))

    n_pred = len(predictions) - len(used_pred)
    n_truth = len(truths) - len(used_truth)
    scores += [0.0] * (max(len(predictions), len(truths)) - len(scores))
    return DiceReport(scores, matches, n_pred, n_truth)


def evaluate(predictions: typ.Sequence[DloInstance],
             truth: SyntheticScene) -> DiceReport:
    return evaluate_masks([inst.mask for inst in predictions], truth.masks)


def crossing_accuracy(crossings: typ.Iterable[Crossing], report: DiceReport,
                      truth: SyntheticScene) -> typ.Tuple[int, int]:
    """
        (correct, scored) over predicted crossings between two different
        instances that both matched different truths. Correct when the
        predicted top is the one drawn last.
    """
    correct = scored = 0
    for crossing in crossings:
        a, b = crossing.instances
        if crossing.top is None or a == b:
            continue
        ta, tb = report.truth_of(a), report.truth_of(b)
        if ta is None or tb is None or ta == tb:
            continue
        scored += 1
        truth_top = a if truth.drawn_above(ta, tb) else b
        correct += crossing.top == truth_top
    return correct, scored
