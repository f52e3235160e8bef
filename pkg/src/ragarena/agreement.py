"""Validation against gold labels: confusion matrices, accuracy, Cohen's kappa.

Also converts scalar per-system metric scores (three-dimension RAGAS
style) into {A, B, Tie} labels so third-party metrics can be compared on
the same footing as pairwise judgments.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from ragarena.errors import DataError, UndefinedKappaError
from ragarena.scoring import JudgmentToken

LABELS = (JudgmentToken.A, JudgmentToken.B, JudgmentToken.TIE)
"""Row/column order used by every confusion matrix in this package."""

DEFAULT_SCORE_DELTA = 0.15
"""Minimum scalar-score lead before a comparison stops counting as a tie."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts indexed (predicted label, gold label) in LABELS order."""

    counts: tuple[tuple[int, int, int], ...]
    n: int

    def __post_init__(self) -> None:
        if len(self.counts) != 3 or any(len(row) != 3 for row in self.counts):
            raise DataError("confusion matrix must be 3x3")
        if any(cell < 0 for row in self.counts for cell in row):
            raise DataError("confusion matrix cells must be non-negative")
        if self.n != sum(cell for row in self.counts for cell in row):
            raise DataError("confusion matrix total does not match its cells")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "ConfusionMatrix":
        counts = tuple(tuple(int(cell) for cell in row) for row in rows)
        return cls(counts, sum(cell for row in counts for cell in row))

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(3))

    @property
    def accuracy(self) -> float:
        if self.n == 0:
            raise DataError("accuracy is undefined for an empty matrix")
        return self.trace / self.n

    def predicted_marginals(self) -> tuple[int, int, int]:
        return tuple(sum(row) for row in self.counts)

    def gold_marginals(self) -> tuple[int, int, int]:
        return tuple(sum(self.counts[i][j] for i in range(3)) for j in range(3))


def confusion(
    pred: Sequence[JudgmentToken], gold: Sequence[JudgmentToken]
) -> ConfusionMatrix:
    """Tabulate predicted vs gold labels."""
    if len(pred) != len(gold):
        raise DataError(f"label lists differ in length: {len(pred)} vs {len(gold)}")
    if not pred:
        raise DataError("cannot tabulate empty label lists")
    index = {label: i for i, label in enumerate(LABELS)}
    rows = [[0, 0, 0] for _ in range(3)]
    for p, g in zip(pred, gold):
        rows[index[p]][index[g]] += 1
    return ConfusionMatrix.from_rows(rows)


def cohens_kappa(matrix: ConfusionMatrix) -> float:
    """Chance-corrected agreement; the chance term is the marginal product."""
    if matrix.n == 0:
        raise DataError("kappa is undefined for an empty matrix")
    p_observed = matrix.trace / matrix.n
    pred_marg = matrix.predicted_marginals()
    gold_marg = matrix.gold_marginals()
    p_expected = sum(pred_marg[i] * gold_marg[i] for i in range(3)) / (matrix.n**2)
    if p_expected >= 1.0:
        raise UndefinedKappaError(
            "all mass sits in one predicted/gold cell pair; kappa is undefined"
        )
    return (p_observed - p_expected) / (1.0 - p_expected)


@dataclass(frozen=True)
class AgreementReport:
    accuracy: float
    kappa: float
    matrix: ConfusionMatrix


def agreement_report(
    pred: Sequence[JudgmentToken], gold: Sequence[JudgmentToken]
) -> AgreementReport:
    matrix = confusion(pred, gold)
    return AgreementReport(accuracy=matrix.accuracy, kappa=cohens_kappa(matrix), matrix=matrix)


@dataclass(frozen=True)
class DimensionScores:
    """Per-question metric dimensions, each normalized to [0, 1]."""

    faithfulness: float
    answer_relevancy: float
    context_relevance: float

    def __post_init__(self) -> None:
        for name, value in (
            ("faithfulness", self.faithfulness),
            ("answer_relevancy", self.answer_relevancy),
            ("context_relevance", self.context_relevance),
        ):
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise DataError(f"dimension {name} out of [0, 1]: {value!r}")


def ragas_aggregate(scores: DimensionScores) -> float:
    """Unweighted mean of the three dimension scores."""
    return (scores.faithfulness + scores.answer_relevancy + scores.context_relevance) / 3.0


_BOUNDARY_GUARD = 1e-12


def scores_to_label(
    score_a: float, score_b: float, delta: float = DEFAULT_SCORE_DELTA
) -> JudgmentToken:
    """Label a scalar-score comparison, requiring a strict lead above delta.

    A difference of exactly delta still counts as a tie: the conservative
    reading of the threshold. Leads within 1e-12 of delta are treated as
    the boundary, so decimal inputs whose true difference equals delta
    (e.g. 0.80 vs 0.65 at delta 0.15) classify as ties despite binary
    rounding.
    """
    if delta < 0:
        raise DataError(f"delta must be >= 0, got {delta!r}")
    if score_a - score_b > delta + _BOUNDARY_GUARD:
        return JudgmentToken.A
    if score_b - score_a > delta + _BOUNDARY_GUARD:
        return JudgmentToken.B
    return JudgmentToken.TIE


def majority_label(labels: Iterable[JudgmentToken]) -> JudgmentToken:
    """Reduce per-annotator labels to one by majority, ties resolving to Tie."""
    tally = Counter(labels)
    if not tally:
        raise DataError("cannot take the majority of zero labels")
    best = max(tally.values())
    leaders = [label for label, count in tally.items() if count == best]
    return leaders[0] if len(leaders) == 1 else JudgmentToken.TIE
