"""Multi-system ranking: Elo state, Swiss pairing, tournaments, baselines.

A match is one full pass over the question set between two systems; its
cumulative pairwise score feeds a single Elo update. Swiss mode pairs
neighbors by current rating while avoiding rematches, cutting the match
count from N(N-1)/2 to rounds*floor(N/2); round-robin mode plays every
pair once and serves as the exhaustive reference.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from ragarena.errors import ConfigError, DataError, PairingExhaustedError
from ragarena.judge.backends import JudgeBackend
from ragarena.judge.evaluate import EvaluateOptions, evaluate_pair
from ragarena.judge.types import QAPair, SystemAnswer, group_answers
from ragarena.scoring import PairScore, ScoredVerdict

INITIAL_RATING = 1500.0
DEFAULT_K_FACTOR = 32.0
TIER_ANCHORS = {"high": 1600.0, "medium": 1500.0, "low": 1400.0}
"""Fixed ratings anchoring the baseline quality spectrum; only the target moves."""

_TIE_EPS = 1e-9


class Mode(str, Enum):
    SWISS = "swiss"
    ROUND_ROBIN = "roundrobin"


@dataclass(frozen=True)
class UpsetRule:
    """K-factor amplification for a lower-rated side that beats expectation.

    The winner's effective K becomes K * (1 + beta * rating_gap / 400);
    plain Elo is recovered at beta = 0 or with the rule disabled.
    """

    enabled: bool = False
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ConfigError(f"upset beta must be >= 0, got {self.beta!r}")


@dataclass(frozen=True)
class EloState:
    """Live ratings plus the set of pairs already matched."""

    ratings: dict[str, float]
    history: frozenset[tuple[str, str]] = frozenset()
    k_factor: float = DEFAULT_K_FACTOR
    upset: UpsetRule = UpsetRule()

    @classmethod
    def fresh(
        cls,
        systems: Iterable[str],
        k_factor: float = DEFAULT_K_FACTOR,
        upset: UpsetRule | None = None,
    ) -> "EloState":
        ids = list(systems)
        if len(set(ids)) != len(ids):
            raise DataError("duplicate system ids in tournament roster")
        return cls(
            ratings={sid: INITIAL_RATING for sid in ids},
            k_factor=k_factor,
            upset=upset or UpsetRule(),
        )


def _pair_key(a: str, b: str) -> tuple[str, str]:
    if a == b:
        raise DataError(f"system {a!r} cannot be paired against itself")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one match: per-question pair scores and their A-side total."""

    pair: tuple[str, str]
    per_question: tuple[tuple[str, PairScore], ...]
    s_total_a: float
    n_questions: int
    verdicts: tuple[ScoredVerdict, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.n_questions < 1 or self.n_questions != len(self.per_question):
            raise DataError("match must cover at least one question")
        total = sum(score.s_a for _, score in self.per_question)
        if abs(total - self.s_total_a) > _TIE_EPS:
            raise DataError("s_total_a does not match the per-question scores")
        if not -_TIE_EPS <= self.s_total_a <= self.n_questions + _TIE_EPS:
            raise DataError(f"s_total_a out of range: {self.s_total_a!r}")

    @classmethod
    def from_scores(
        cls,
        pair: tuple[str, str],
        per_question: Iterable[tuple[str, PairScore]],
        verdicts: Iterable[ScoredVerdict] = (),
    ) -> "MatchResult":
        scores = tuple(per_question)
        return cls(
            pair=pair,
            per_question=scores,
            s_total_a=sum(score.s_a for _, score in scores),
            n_questions=len(scores),
            verdicts=tuple(verdicts),
        )

    @property
    def mean_score_a(self) -> float:
        return self.s_total_a / self.n_questions


def expected_score(r_a: float, r_b: float) -> float:
    """Expected match score of the first side: 400 rating points per 10x odds."""
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / 400.0))


def elo_update(state: EloState, match: MatchResult) -> EloState:
    """Fold one match into the ratings and record the pairing.

    Both sides move by K times (mean score minus expected score); the
    B-side surprise is the exact negation of the A-side's, so with the
    upset rule disabled the rating sum is conserved exactly.
    """
    side_a, side_b = match.pair
    for sid in match.pair:
        if sid not in state.ratings:
            raise DataError(f"unknown system in match result: {sid!r}")
    r_a, r_b = state.ratings[side_a], state.ratings[side_b]
    delta = match.mean_score_a - expected_score(r_a, r_b)

    k_a = k_b = state.k_factor
    if state.upset.enabled:
        if delta > 0 and r_a < r_b:
            k_a = state.k_factor * (1.0 + state.upset.beta * (r_b - r_a) / 400.0)
        elif delta < 0 and r_b < r_a:
            k_b = state.k_factor * (1.0 + state.upset.beta * (r_a - r_b) / 400.0)

    ratings = dict(state.ratings)
    ratings[side_a] = r_a + k_a * delta
    ratings[side_b] = r_b + k_b * (-delta)
    return EloState(
        ratings=ratings,
        history=state.history | {_pair_key(side_a, side_b)},
        k_factor=state.k_factor,
        upset=state.upset,
    )


def _standings(ratings: Mapping[str, float]) -> list[str]:
    return sorted(ratings, key=lambda sid: (-ratings[sid], sid))


def _complete_matching(
    order: list[str], banned: frozenset[tuple[str, str]]
) -> list[tuple[str, str]] | None:
    """First repeat-free perfect matching in rating order, or None.

    Greedy on the sorted list: the top unpaired system takes its
    nearest-rated legal partner, backtracking when that choice strands
    the remainder.
    """
    if not order:
        return []
    head, rest = order[0], order[1:]
    for i, candidate in enumerate(rest):
        if _pair_key(head, candidate) in banned:
            continue
        tail = _complete_matching(rest[:i] + rest[i + 1 :], banned)
        if tail is not None:
            return [(head, candidate)] + tail
    return None


def swiss_pairings(state: EloState, round_index: int = 0) -> list[tuple[str, str]]:
    """Pair systems for one Swiss round.

    Systems are sorted by rating (ties by id), adjacent entries paired,
    rematches avoided via backtracking. With an odd field, the
    lowest-rated system whose removal leaves a legal matching sits out.
    Deterministic given the state.
    """
    order = _standings(state.ratings)
    if len(order) < 2:
        raise DataError("at least two systems are required for pairing")
    if len(order) % 2 == 0:
        pairs = _complete_matching(order, state.history)
        if pairs is None:
            raise PairingExhaustedError(
                f"round {round_index}: no repeat-free pairing exists for {len(order)} systems"
            )
        return pairs
    for bye_position in range(len(order) - 1, -1, -1):
        remaining = order[:bye_position] + order[bye_position + 1 :]
        pairs = _complete_matching(remaining, state.history)
        if pairs is not None:
            return pairs
    raise PairingExhaustedError(
        f"round {round_index}: no repeat-free pairing exists even granting a bye"
    )


@dataclass(frozen=True)
class RoundRecord:
    index: int
    pairings: tuple[tuple[str, str], ...]
    bye: str | None
    matches: tuple[MatchResult, ...]
    ratings_after: dict[str, float]


@dataclass(frozen=True)
class TournamentResult:
    mode: Mode
    systems: tuple[str, ...]
    rounds: tuple[RoundRecord, ...]
    final_ratings: dict[str, float]
    final_order: tuple[str, ...]
    total_matches: int
    k_factor: float = DEFAULT_K_FACTOR
    upset: UpsetRule = UpsetRule()


def validate_coverage(
    systems: Iterable[str],
    answers: Mapping[str, Mapping[str, SystemAnswer]],
    dataset: Iterable[QAPair],
) -> None:
    """Preflight check that every system answered every question."""
    gaps = []
    question_ids = [qa.id for qa in dataset]
    for sid in systems:
        have = answers.get(sid, {})
        missing = [qid for qid in question_ids if qid not in have]
        if missing:
            gaps.append(f"system {sid!r} is missing answers for: {', '.join(missing)}")
    if gaps:
        raise DataError("; ".join(gaps))


def play_match(
    backend: JudgeBackend,
    dataset: list[QAPair],
    answers_first: Mapping[str, SystemAnswer],
    answers_second: Mapping[str, SystemAnswer],
    pair: tuple[str, str],
    options: EvaluateOptions | None = None,
) -> MatchResult:
    """Judge every question between two systems; first side is presented as A."""
    per_question: list[tuple[str, PairScore]] = []
    verdicts: list[ScoredVerdict] = []
    for qa in dataset:
        verdict = evaluate_pair(backend, qa, answers_first[qa.id], answers_second[qa.id], options)
        per_question.append((qa.id, verdict.score))
        verdicts.append(verdict)
    return MatchResult.from_scores(pair, per_question, verdicts)


def _normalize_answers(
    answers: Mapping[str, Mapping[str, SystemAnswer]] | Iterable[SystemAnswer],
) -> dict[str, dict[str, SystemAnswer]]:
    if isinstance(answers, Mapping):
        return {sid: dict(per) for sid, per in answers.items()}
    return group_answers(answers)


def run_tournament(
    systems: Iterable[str],
    answers: Mapping[str, Mapping[str, SystemAnswer]] | Iterable[SystemAnswer],
    dataset: list[QAPair],
    backend: JudgeBackend,
    rounds: int = 4,
    mode: Mode = Mode.SWISS,
    *,
    k_factor: float = DEFAULT_K_FACTOR,
    upset: UpsetRule | None = None,
    options: EvaluateOptions | None = None,
    max_workers: int = 1,
) -> TournamentResult:
    """Run a full multi-system tournament and return the ranked result.

    Swiss mode plays `rounds` rounds with pairings fixed at round start;
    matches within a round are independent (and may run on worker
    threads), with Elo updates applied in pairing order once the round
    completes. Round-robin mode plays every pair once, folding updates in
    canonical pair order. In round-robin mode `rounds` is ignored.
    """
    roster = list(systems)
    if len(roster) < 2:
        raise ConfigError("a tournament needs at least two systems")
    if mode is Mode.SWISS and rounds < 1:
        raise ConfigError(f"Swiss tournaments need at least one round, got {rounds!r}")
    by_system = _normalize_answers(answers)
    validate_coverage(roster, by_system, dataset)

    state = EloState.fresh(roster, k_factor, upset)
    round_records: list[RoundRecord] = []

    def run_round(index: int, pairs: list[tuple[str, str]]) -> None:
        nonlocal state
        matches = _play_round(backend, dataset, by_system, pairs, options, max_workers)
        for match in matches:
            state = elo_update(state, match)
        paired = {sid for pair in pairs for sid in pair}
        bye = next((sid for sid in _standings(state.ratings) if sid not in paired), None)
        round_records.append(
            RoundRecord(
                index=index,
                pairings=tuple(pairs),
                bye=bye if len(roster) % 2 else None,
                matches=tuple(matches),
                ratings_after=dict(state.ratings),
            )
        )

    if mode is Mode.SWISS:
        for index in range(rounds):
            run_round(index, swiss_pairings(state, index))
    else:
        all_pairs = sorted(
            _pair_key(a, b) for i, a in enumerate(roster) for b in roster[i + 1 :]
        )
        run_round(0, all_pairs)

    final_order = _standings(state.ratings)
    return TournamentResult(
        mode=mode,
        systems=tuple(roster),
        rounds=tuple(round_records),
        final_ratings=dict(state.ratings),
        final_order=tuple(final_order),
        total_matches=sum(len(record.matches) for record in round_records),
        k_factor=k_factor,
        upset=upset or UpsetRule(),
    )


def _play_round(
    backend: JudgeBackend,
    dataset: list[QAPair],
    by_system: Mapping[str, Mapping[str, SystemAnswer]],
    pairs: list[tuple[str, str]],
    options: EvaluateOptions | None,
    max_workers: int,
) -> list[MatchResult]:
    # Joined in pairing order, so results never depend on completion order.
    if max_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [
                pool.submit(
                    play_match, backend, dataset, by_system[a], by_system[b], (a, b), options
                )
                for a, b in pairs
            ]
            return [future.result() for future in futures]
    return [
        play_match(backend, dataset, by_system[a], by_system[b], (a, b), options)
        for a, b in pairs
    ]


@dataclass(frozen=True)
class TierResult:
    wins: int
    losses: int
    ties: int
    mean_score: float
    match: MatchResult = field(compare=False)


@dataclass(frozen=True)
class BaselineReport:
    """Single-system positioning against the three quality-tier answer sets."""

    target: str
    tier_results: dict[str, TierResult]
    final_elo: float


def baseline_evaluate(
    target_answers: Mapping[str, SystemAnswer],
    tier_answer_sets: Mapping[str, Mapping[str, SystemAnswer]],
    dataset: list[QAPair],
    backend: JudgeBackend,
    *,
    k_factor: float = DEFAULT_K_FACTOR,
    options: EvaluateOptions | None = None,
) -> BaselineReport:
    """Position one target system against high/medium/low tier answer sets.

    Each tier is played as a normal match with the target presented
    first. The final Elo starts the target at 1500 and folds the three
    matches in high, medium, low order against the fixed tier anchors;
    anchor ratings never move.
    """
    expected_tiers = set(TIER_ANCHORS)
    if set(tier_answer_sets) != expected_tiers:
        raise ConfigError(
            f"tier answer sets must be exactly {sorted(expected_tiers)}, "
            f"got {sorted(tier_answer_sets)}"
        )
    target_id = _single_system_id(target_answers.values())
    coverage = {"target": dict(target_answers)}
    coverage.update({tier: dict(per) for tier, per in tier_answer_sets.items()})
    validate_coverage(list(coverage), coverage, dataset)

    tier_results: dict[str, TierResult] = {}
    rating = INITIAL_RATING
    for tier in ("high", "medium", "low"):
        match = play_match(
            backend, dataset, target_answers, tier_answer_sets[tier], (target_id, tier), options
        )
        wins = losses = ties = 0
        for _, score in match.per_question:
            if abs(score.s_a - 0.5) <= _TIE_EPS:
                ties += 1
            elif score.s_a > 0.5:
                wins += 1
            else:
                losses += 1
        tier_results[tier] = TierResult(wins, losses, ties, match.mean_score_a, match)
        rating += k_factor * (match.mean_score_a - expected_score(rating, TIER_ANCHORS[tier]))

    return BaselineReport(target=target_id, tier_results=tier_results, final_elo=rating)


def _single_system_id(answers: Iterable[SystemAnswer]) -> str:
    ids = {answer.system_id for answer in answers}
    if len(ids) != 1:
        raise DataError(f"target answer set must come from one system, got {sorted(ids)}")
    return ids.pop()


def kendall_tau(order: Iterable[str], reference: Iterable[str]) -> float:
    """Rank correlation between two strict orderings of the same items."""
    order = list(order)
    reference = list(reference)
    if sorted(order) != sorted(reference):
        raise ValueError("orderings must contain the same items")
    position = {sid: i for i, sid in enumerate(reference)}
    ranks = [position[sid] for sid in order]
    n = len(ranks)
    if n < 2:
        return 1.0
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if ranks[i] < ranks[j]:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)
