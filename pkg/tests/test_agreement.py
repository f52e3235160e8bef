"""Agreement-metric tests, checked against a brute-force kappa oracle."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ragarena.agreement import (
    LABELS,
    ConfusionMatrix,
    DimensionScores,
    agreement_report,
    cohens_kappa,
    confusion,
    majority_label,
    ragas_aggregate,
    scores_to_label,
)
from ragarena.errors import DataError, UndefinedKappaError
from ragarena.scoring import JudgmentToken

labels_strategy = st.lists(st.sampled_from(LABELS), min_size=1, max_size=60)
unit_floats = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)

A, B, T = JudgmentToken.A, JudgmentToken.B, JudgmentToken.TIE


def brute_force_kappa(matrix: ConfusionMatrix) -> float:
    """Independent implementation: direct double loop over label pairs."""
    n = matrix.n
    p_o = sum(matrix.counts[i][i] for i in range(3)) / n
    p_e = 0.0
    for label in range(3):
        pred_mass = sum(matrix.counts[label][g] for g in range(3)) / n
        gold_mass = sum(matrix.counts[p][label] for p in range(3)) / n
        p_e += pred_mass * gold_mass
    return (p_o - p_e) / (1.0 - p_e)


# -- ragas aggregation -----------------------------------------------------------


def test_ragas_aggregate_examples():
    assert ragas_aggregate(DimensionScores(1.0, 1.0, 1.0)) == 1.0
    assert ragas_aggregate(DimensionScores(0.9, 0.6, 0.6)) == pytest.approx(0.7, abs=1e-12)
    assert ragas_aggregate(DimensionScores(0.0, 0.0, 0.0)) == 0.0


def test_dimension_scores_validate_range():
    with pytest.raises(DataError):
        DimensionScores(1.2, 0.5, 0.5)
    with pytest.raises(DataError):
        DimensionScores(0.5, -0.1, 0.5)


# -- score thresholding ------------------------------------------------------------


def test_scores_to_label_examples():
    assert scores_to_label(0.90, 0.70, 0.15) is A
    # A lead of exactly delta is still a tie.
    assert scores_to_label(0.80, 0.65, 0.15) is T
    assert scores_to_label(0.42, 0.42, 0.15) is T
    assert scores_to_label(0.20, 0.60, 0.15) is B


@given(score_a=unit_floats, score_b=unit_floats, delta=st.floats(0.0, 0.5, allow_nan=False))
def test_scores_to_label_antisymmetry(score_a, score_b, delta):
    forward = scores_to_label(score_a, score_b, delta)
    backward = scores_to_label(score_b, score_a, delta)
    assert forward is backward.swapped()


def test_scores_to_label_rejects_negative_delta():
    with pytest.raises(DataError):
        scores_to_label(0.5, 0.5, -0.1)


# -- confusion matrix -----------------------------------------------------------------


def test_confusion_counts_by_hand():
    matrix = confusion([A, A, B, T], [A, B, B, T])
    assert matrix.n == 4
    assert matrix.trace == 3
    assert matrix.counts[0][1] == 1  # predicted A, gold B


@given(labels=labels_strategy)
def test_perfect_agreement_is_diagonal(labels):
    matrix = confusion(labels, labels)
    assert matrix.accuracy == 1.0
    assert matrix.trace == matrix.n


def test_total_disagreement_is_single_off_diagonal_cell():
    matrix = confusion([A] * 5, [B] * 5)
    assert matrix.counts[0][1] == 5
    assert matrix.trace == 0


def test_confusion_rejects_mismatched_or_empty_inputs():
    with pytest.raises(DataError):
        confusion([A], [A, B])
    with pytest.raises(DataError):
        confusion([], [])


@given(labels=labels_strategy, seed=st.integers(0, 2**16))
def test_confusion_invariant_under_joint_permutation(labels, seed):
    gold = list(reversed(labels))
    order = list(range(len(labels)))
    random.Random(seed).shuffle(order)
    base = confusion(labels, gold)
    permuted = confusion([labels[i] for i in order], [gold[i] for i in order])
    assert base == permuted


# -- Cohen's kappa -----------------------------------------------------------------------


def test_kappa_hand_derived_matrix():
    # p_o = 0.9, p_e = (3*2 + 3*4 + 4*4)/100 = 0.34, kappa = 0.56/0.66.
    matrix = ConfusionMatrix.from_rows([[2, 1, 0], [0, 3, 0], [0, 0, 4]])
    assert cohens_kappa(matrix) == pytest.approx(0.8484848484848486, abs=1e-4)


def test_kappa_diagonal_is_one():
    for rows in ([[2, 0, 0], [0, 3, 0], [0, 0, 4]], [[1, 0, 0], [0, 1, 0], [0, 0, 1]]):
        assert cohens_kappa(ConfusionMatrix.from_rows(rows)) == pytest.approx(1.0, abs=1e-12)


def test_kappa_one_only_when_diagonal():
    off = ConfusionMatrix.from_rows([[5, 1, 0], [0, 5, 0], [0, 0, 5]])
    assert cohens_kappa(off) < 1.0


def test_kappa_uniform_independence_is_zero():
    uniform = ConfusionMatrix.from_rows([[4, 4, 4], [4, 4, 4], [4, 4, 4]])
    assert cohens_kappa(uniform) == pytest.approx(0.0, abs=1e-12)


def test_kappa_undefined_when_one_cell_holds_everything():
    with pytest.raises(UndefinedKappaError):
        cohens_kappa(ConfusionMatrix.from_rows([[7, 0, 0], [0, 0, 0], [0, 0, 0]]))


def test_kappa_matches_brute_force_on_random_matrices():
    rng = random.Random(424242)
    checked = 0
    while checked < 1000:
        rows = [[rng.randrange(0, 12) for _ in range(3)] for _ in range(3)]
        matrix = ConfusionMatrix.from_rows(rows)
        if matrix.n == 0:
            continue
        pred_marg = matrix.predicted_marginals()
        gold_marg = matrix.gold_marginals()
        if sum(pred_marg[i] * gold_marg[i] for i in range(3)) == matrix.n**2:
            continue
        assert cohens_kappa(matrix) == pytest.approx(brute_force_kappa(matrix), abs=1e-12)
        checked += 1


def test_agreement_report_bundles_metrics():
    report = agreement_report([A, B, T, A], [A, B, T, B])
    assert report.accuracy == pytest.approx(0.75)
    assert report.matrix.n == 4
    assert -1.0 <= report.kappa <= 1.0


# -- majority reduction -------------------------------------------------------------------


def test_majority_label_rules():
    assert majority_label([A, A, B]) is A
    assert majority_label([A, B]) is T
    assert majority_label([T, T, A]) is T
    assert majority_label([B]) is B
    with pytest.raises(DataError):
        majority_label([])
