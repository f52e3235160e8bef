"""Elo, Swiss pairing, tournament, and baseline tests."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ragarena.errors import ConfigError, DataError, PairingExhaustedError
from ragarena.judge.backends import make_category_oracle
from ragarena.ranking import (
    EloState,
    MatchResult,
    Mode,
    UpsetRule,
    baseline_evaluate,
    elo_update,
    expected_score,
    kendall_tau,
    run_tournament,
    swiss_pairings,
)
from ragarena.scoring import AnswerCategory, PairScore

from conftest import make_answers, make_dataset

ratings_floats = st.floats(min_value=1000.0, max_value=2000.0, allow_nan=False)


def _match(pair, scores):
    per_question = tuple((f"q{i:03d}", s) for i, s in enumerate(scores))
    return MatchResult.from_scores(pair, per_question)


def _win(s_a):
    return PairScore(s_a, 1.0 - s_a)


# -- expected score -----------------------------------------------------------


def test_expected_score_equal_ratings():
    assert expected_score(1500.0, 1500.0) == 0.5


def test_expected_score_400_point_gap():
    assert expected_score(1500.0, 1900.0) == pytest.approx(1 / 11, abs=1e-12)


@given(r_a=ratings_floats, r_b=ratings_floats)
def test_expected_scores_sum_to_one(r_a, r_b):
    assert expected_score(r_a, r_b) + expected_score(r_b, r_a) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 < expected_score(r_a, r_b) < 1.0


# -- Elo update ----------------------------------------------------------------


def test_elo_update_hand_example():
    # 32 * (45.5/70 - 0.5) = 4.8 on each side, worked by hand.
    state = EloState.fresh(["A", "B"])
    scores = [_win(1.0)] * 45 + [_win(0.5)] + [_win(0.0)] * 24
    match = _match(("A", "B"), scores)
    assert match.s_total_a == pytest.approx(45.5, abs=1e-12)
    updated = elo_update(state, match)
    assert updated.ratings["A"] == pytest.approx(1504.8, abs=1e-9)
    assert updated.ratings["B"] == pytest.approx(1495.2, abs=1e-9)
    assert ("A", "B") in updated.history


def test_elo_update_zero_surprise_leaves_ratings_unchanged():
    state = EloState.fresh(["A", "B"])
    match = _match(("A", "B"), [_win(0.5)] * 10)
    updated = elo_update(state, match)
    assert updated.ratings["A"] == 1500.0
    assert updated.ratings["B"] == 1500.0


@given(
    s_total=st.integers(min_value=0, max_value=20).map(lambda halves: halves / 2),
    r_a=ratings_floats,
    r_b=ratings_floats,
)
def test_elo_update_conserves_rating_sum(s_total, r_a, r_b):
    # The two surprise terms are exact negations; only the final additions
    # round, so conservation holds to float precision at rating scale.
    state = EloState(ratings={"A": r_a, "B": r_b})
    scores = [_win(1.0)] * int(s_total) + ([_win(0.5)] if s_total % 1 else []) + [_win(0.0)] * (
        10 - int(s_total) - (1 if s_total % 1 else 0)
    )
    updated = elo_update(state, _match(("A", "B"), scores))
    assert updated.ratings["A"] + updated.ratings["B"] == pytest.approx(r_a + r_b, abs=1e-9)


def test_elo_update_upset_amplifies_lower_rated_winner():
    state = EloState(ratings={"low": 1400.0, "high": 1600.0}, upset=UpsetRule(enabled=True))
    match = _match(("low", "high"), [_win(1.0)] * 9 + [_win(0.0)])
    updated = elo_update(state, match)
    expected = expected_score(1400.0, 1600.0)
    amplified_k = 32.0 * (1.0 + 0.5 * 200.0 / 400.0)
    assert updated.ratings["low"] == pytest.approx(1400.0 + amplified_k * (0.9 - expected))
    assert updated.ratings["high"] == pytest.approx(1600.0 - 32.0 * (0.9 - expected))


def test_elo_update_upset_beta_zero_is_plain_elo():
    plain = EloState(ratings={"low": 1400.0, "high": 1600.0})
    amped = EloState(
        ratings={"low": 1400.0, "high": 1600.0}, upset=UpsetRule(enabled=True, beta=0.0)
    )
    match = _match(("low", "high"), [_win(1.0)] * 10)
    assert elo_update(plain, match).ratings == elo_update(amped, match).ratings


@given(
    r_a=ratings_floats,
    r_b=ratings_floats,
    wins_small=st.integers(min_value=0, max_value=10),
    extra=st.integers(min_value=0, max_value=10),
    upset_on=st.booleans(),
)
def test_elo_update_monotone_in_total_score(r_a, r_b, wins_small, extra, upset_on):
    wins_big = min(10, wins_small + extra)
    state = EloState(ratings={"A": r_a, "B": r_b}, upset=UpsetRule(enabled=upset_on))
    small = _match(("A", "B"), [_win(1.0)] * wins_small + [_win(0.0)] * (10 - wins_small))
    big = _match(("A", "B"), [_win(1.0)] * wins_big + [_win(0.0)] * (10 - wins_big))
    assert elo_update(state, small).ratings["A"] <= elo_update(state, big).ratings["A"]


def test_elo_update_unknown_system_rejected():
    state = EloState.fresh(["A", "B"])
    with pytest.raises(DataError):
        elo_update(state, _match(("A", "C"), [_win(1.0)]))


def test_match_result_total_must_be_consistent():
    with pytest.raises(DataError):
        MatchResult(
            pair=("A", "B"),
            per_question=(("q1", PairScore(1.0, 0.0)),),
            s_total_a=0.25,
            n_questions=1,
        )


# -- Swiss pairing --------------------------------------------------------------


def _state(ratings, history=()):
    return EloState(
        ratings=dict(ratings),
        history=frozenset(tuple(sorted(pair)) for pair in history),
    )


def test_swiss_pairs_adjacent_by_rating():
    state = _state({"S1": 1520.0, "S2": 1510.0, "S3": 1500.0, "S4": 1490.0})
    assert swiss_pairings(state) == [("S1", "S2"), ("S3", "S4")]


def test_swiss_backtracks_to_nearest_legal_partner():
    state = _state(
        {"S1": 1520.0, "S2": 1510.0, "S3": 1500.0, "S4": 1490.0},
        history=[("S1", "S2")],
    )
    assert swiss_pairings(state) == [("S1", "S3"), ("S2", "S4")]


def test_swiss_equal_ratings_pair_by_id():
    state = _state({f"S{i}": 1500.0 for i in range(1, 9)})
    pairs = swiss_pairings(state)
    assert len(pairs) == 4
    seen = [sid for pair in pairs for sid in pair]
    assert len(set(seen)) == 8


def test_swiss_exhausted_history_raises():
    ids = ["S1", "S2", "S3", "S4"]
    everything = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]
    state = _state({sid: 1500.0 for sid in ids}, history=everything)
    with pytest.raises(PairingExhaustedError):
        swiss_pairings(state)


def test_swiss_odd_field_gives_lowest_rated_a_bye():
    state = _state({"S1": 1540.0, "S2": 1520.0, "S3": 1500.0, "S4": 1480.0, "S5": 1460.0})
    pairs = swiss_pairings(state)
    assert pairs == [("S1", "S2"), ("S3", "S4")]
    assert all("S5" not in pair for pair in pairs)


def test_swiss_bye_moves_up_when_lowest_cannot_sit_out():
    state = _state({"a": 1500.0, "b": 1500.0, "c": 1500.0}, history=[("a", "b")])
    assert swiss_pairings(state) == [("a", "c")]


# -- tournaments ------------------------------------------------------------------


def _point_profiles(order):
    # Strictly ordered mixtures: stronger systems put more mass on a
    # fully correct answer.
    n = len(order)
    return {
        sid: {
            AnswerCategory.FULLY_CORRECT: 0.9 - 0.8 * i / max(n - 1, 1),
            AnswerCategory.INCORRECT: 0.1 + 0.8 * i / max(n - 1, 1),
        }
        for i, sid in enumerate(order)
    }


def test_swiss_tournament_match_count_and_no_repeats():
    systems = [f"S{i}" for i in range(1, 9)]
    dataset = make_dataset(4)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=1)
    result = run_tournament(systems, answers, dataset, backend, rounds=4, mode=Mode.SWISS)
    assert result.total_matches == 16
    assert all(len(record.matches) == 4 for record in result.rounds)
    played = [tuple(sorted(match.pair)) for record in result.rounds for match in record.matches]
    assert len(played) == len(set(played))


def test_roundrobin_tournament_match_count():
    systems = [f"S{i}" for i in range(1, 9)]
    dataset = make_dataset(3)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=1)
    result = run_tournament(systems, answers, dataset, backend, mode=Mode.ROUND_ROBIN)
    assert result.total_matches == 28
    assert len(result.rounds) == 1


def test_two_system_tournament_smallest_instance():
    systems = ["alpha", "beta"]
    dataset = make_dataset(3)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(
        {
            "alpha": {AnswerCategory.FULLY_CORRECT: 1.0},
            "beta": {AnswerCategory.INCORRECT: 1.0},
        },
        seed=0,
    )
    result = run_tournament(systems, answers, dataset, backend, rounds=1)
    assert result.total_matches == 1
    assert result.final_order == ("alpha", "beta")


def test_rating_sum_conserved_over_noisy_tournaments():
    systems = [f"S{i}" for i in range(1, 7)]
    dataset = make_dataset(5)
    answers = make_answers(systems, dataset)
    for seed in range(3):
        backend = make_category_oracle(_point_profiles(systems), noise=0.3, seed=seed)
        result = run_tournament(systems, answers, dataset, backend, rounds=3)
        assert sum(result.final_ratings.values()) == pytest.approx(len(systems) * 1500.0, abs=1e-6)


def test_match_count_law_with_odd_field():
    systems = [f"S{i}" for i in range(1, 6)]
    dataset = make_dataset(3)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=2)
    result = run_tournament(systems, answers, dataset, backend, rounds=3)
    assert result.total_matches == 3 * (5 // 2)
    assert all(record.bye is not None for record in result.rounds)


def test_parallel_match_execution_matches_serial():
    systems = [f"S{i}" for i in range(1, 9)]
    dataset = make_dataset(3)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), noise=0.2, seed=5)
    serial = run_tournament(systems, answers, dataset, backend, rounds=4)
    parallel = run_tournament(systems, answers, dataset, backend, rounds=4, max_workers=4)
    assert serial.final_ratings == parallel.final_ratings
    assert serial.rounds == parallel.rounds


def test_parallel_matches_share_a_cache_safely(tmp_path):
    from ragarena.judge.evaluate import EvaluateOptions
    from ragarena.store import VerdictCache

    systems = [f"S{i}" for i in range(1, 7)]
    dataset = make_dataset(4)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=8)
    options = EvaluateOptions(cache=VerdictCache(tmp_path / "cache"))
    warm = run_tournament(
        systems, answers, dataset, backend, rounds=3, options=options, max_workers=4
    )
    replay = run_tournament(
        systems, answers, dataset, backend, rounds=3, options=options, max_workers=4
    )
    assert warm.final_ratings == replay.final_ratings
    # One cache entry per (match, question) comparison.
    assert len(list((tmp_path / "cache").rglob("*.json"))) == warm.total_matches * 4


def test_missing_answers_fail_preflight_with_gap_list():
    systems = ["S1", "S2"]
    dataset = make_dataset(3)
    answers = make_answers(systems, dataset)
    del answers["S2"][dataset[1].id]
    backend = make_category_oracle(_point_profiles(systems), seed=0)
    with pytest.raises(DataError, match=r"S2.*q002"):
        run_tournament(systems, answers, dataset, backend, rounds=1)


def test_tournament_rejects_bad_round_count():
    systems = ["S1", "S2"]
    dataset = make_dataset(2)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=0)
    with pytest.raises(ConfigError):
        run_tournament(systems, answers, dataset, backend, rounds=0)


def test_small_fidelity_planted_order_recovered():
    systems = [f"S{i}" for i in range(1, 5)]
    dataset = make_dataset(8)
    answers = make_answers(systems, dataset)
    backend = make_category_oracle(_point_profiles(systems), seed=13)
    swiss = run_tournament(systems, answers, dataset, backend, rounds=3)
    robin = run_tournament(systems, answers, dataset, backend, mode=Mode.ROUND_ROBIN)
    assert swiss.final_order == tuple(systems)
    assert robin.final_order == tuple(systems)
    assert kendall_tau(swiss.final_order, systems) == 1.0


# -- baseline evaluation ------------------------------------------------------------


def _baseline_setup(dataset, target_cat, high_cat, medium_cat, low_cat):
    answers = make_answers(["target", "hi", "med", "lo"], dataset)
    backend = make_category_oracle(
        {
            "target": {target_cat: 1.0},
            "hi": {high_cat: 1.0},
            "med": {medium_cat: 1.0},
            "lo": {low_cat: 1.0},
        },
        seed=0,
    )
    tiers = {"high": answers["hi"], "medium": answers["med"], "low": answers["lo"]}
    return answers["target"], tiers, backend


def test_baseline_target_matching_high_tier_ties_it():
    dataset = make_dataset(6)
    target, tiers, backend = _baseline_setup(
        dataset,
        AnswerCategory.FULLY_CORRECT,
        AnswerCategory.FULLY_CORRECT,
        AnswerCategory.INSUFFICIENT,
        AnswerCategory.INCORRECT,
    )
    report = baseline_evaluate(target, tiers, dataset, backend)
    high = report.tier_results["high"]
    assert (high.wins, high.losses, high.ties) == (0, 0, len(dataset))
    assert report.tier_results["low"].wins == len(dataset)


def test_baseline_fold_lands_between_anchors():
    dataset = make_dataset(6)
    target, tiers, backend = _baseline_setup(
        dataset,
        AnswerCategory.PARTIALLY_CORRECT,
        AnswerCategory.FULLY_CORRECT,
        AnswerCategory.INSUFFICIENT,
        AnswerCategory.INCORRECT,
    )
    report = baseline_evaluate(target, tiers, dataset, backend)
    # Independent fold: start at 1500, play high/medium/low anchors in order.
    rating = 1500.0
    for tier, anchor, mean in (("high", 1600.0, 0.0), ("medium", 1500.0, 1.0), ("low", 1400.0, 1.0)):
        assert report.tier_results[tier].mean_score == pytest.approx(mean, abs=1e-12)
        rating += 32.0 * (mean - expected_score(rating, anchor))
    assert report.final_elo == pytest.approx(rating, abs=1e-9)
    assert 1500.0 < report.final_elo < 1600.0


def test_baseline_requires_exact_tier_names():
    dataset = make_dataset(2)
    target, tiers, backend = _baseline_setup(
        dataset,
        AnswerCategory.PARTIALLY_CORRECT,
        AnswerCategory.FULLY_CORRECT,
        AnswerCategory.INSUFFICIENT,
        AnswerCategory.INCORRECT,
    )
    del tiers["medium"]
    with pytest.raises(ConfigError):
        baseline_evaluate(target, tiers, dataset, backend)


def test_baseline_requires_full_tier_coverage():
    dataset = make_dataset(3)
    target, tiers, backend = _baseline_setup(
        dataset,
        AnswerCategory.PARTIALLY_CORRECT,
        AnswerCategory.FULLY_CORRECT,
        AnswerCategory.INSUFFICIENT,
        AnswerCategory.INCORRECT,
    )
    del tiers["low"][dataset[0].id]
    with pytest.raises(DataError):
        baseline_evaluate(target, tiers, dataset, backend)


# -- rank correlation ------------------------------------------------------------


def test_kendall_tau_basics():
    order = ["a", "b", "c", "d"]
    assert kendall_tau(order, order) == 1.0
    assert kendall_tau(list(reversed(order)), order) == -1.0
    assert kendall_tau(["b", "a", "c", "d"], order) == pytest.approx(4 / 6)
    with pytest.raises(ValueError):
        kendall_tau(["a"], ["b"])
