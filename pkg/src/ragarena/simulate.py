"""Synthetic-judge fidelity experiments.

Plants a roster of systems with strictly ordered quality profiles, runs
Swiss and round-robin tournaments under the category oracle, and scores
how well each recovers the planted order (Kendall tau).

The planted questions carry a stratified difficulty spread: an evenly
spaced grid over [0, 1), permuted across question ids by the seed. With
profile levels aligned to that grid, the noiseless margin between any
two systems is exact and identical for every seed, so planted-order
recovery is a deterministic property of the tournament format rather
than a sampling accident; judge noise is then the only stochastic
source. Because error bars can come either from judge noise or from the
particular question sample, the variance decomposition reruns the Swiss
tournament with i.i.d. difficulty draws, resampling each source
separately.
"""

from __future__ import annotations

import random
import statistics
from collections.abc import Iterable
from dataclasses import dataclass

from ragarena.errors import ConfigError
from ragarena.judge.backends import CategoryProfile, make_category_oracle
from ragarena.judge.types import QAPair, SystemAnswer
from ragarena.ranking import Mode, kendall_tau, run_tournament
from ragarena.scoring import AnswerCategory

DEFAULT_FIDELITY_ROUNDS = 5
"""Fewest Swiss rounds at which an eight-system planted field sorts exactly.

At four rounds the final pairing forces one mid-table system to play up
while its neighbor plays down, and the expected-score correction at
small rating gaps cannot offset the score swing, so adjacent neighbors
cross for any margin geometry. Five rounds (20 of 28 matches) is the
smallest count that recovers the planted order.
"""


def ordered_profiles(n_systems: int, level_width: float = 1.0 / 24.0) -> dict[str, CategoryProfile]:
    """Strictly quality-ordered four-level profiles: S01 strongest down.

    Profile i (1-based) places its three cumulative category boundaries
    at (n+1-i)w, (2n+1-i)w and (3n+1-i)w. The three boundary families
    occupy disjoint difficulty bands, each stepping down by w per rank,
    so on a shared difficulty every system grades weakly above all
    lower-ranked ones and systems d ranks apart disagree on a difficulty
    band of total measure 3dw: separation grows linearly with rank
    distance, without saturating.
    """
    if n_systems < 2:
        raise ConfigError("need at least two planted systems")
    if not 0.0 < level_width <= 1.0 / (3 * n_systems):
        raise ConfigError(
            f"level width must lie in (0, 1/{3 * n_systems}] so all profiles stay valid"
        )
    n, w = n_systems, level_width
    profiles: dict[str, CategoryProfile] = {}
    for i in range(1, n + 1):
        profiles[f"S{i:02d}"] = {
            AnswerCategory.FULLY_CORRECT: (n + 1 - i) * w,
            AnswerCategory.PARTIALLY_CORRECT: n * w,
            AnswerCategory.INSUFFICIENT: n * w,
            AnswerCategory.INCORRECT: 1.0 - (3 * n + 1 - i) * w,
        }
    return profiles


def synthetic_dataset(n_questions: int) -> list[QAPair]:
    return [
        QAPair.create(
            f"q{i + 1:03d}",
            f"synthetic question {i + 1}",
            f"synthetic reference answer {i + 1}",
        )
        for i in range(n_questions)
    ]


def synthetic_answers(
    systems: Iterable[str], dataset: list[QAPair]
) -> dict[str, dict[str, SystemAnswer]]:
    return {
        sid: {
            qa.id: SystemAnswer.create(sid, qa.id, f"answer from {sid} to {qa.id}")
            for qa in dataset
        }
        for sid in systems
    }


def stratified_difficulties(dataset: list[QAPair], seed: int) -> dict[str, float]:
    """Grid-midpoint difficulties, permuted across question ids by seed."""
    grid = [(i + 0.5) / len(dataset) for i in range(len(dataset))]
    random.Random(seed).shuffle(grid)
    return {qa.id: value for qa, value in zip(dataset, grid)}


@dataclass(frozen=True)
class FidelityRun:
    seed: int
    swiss_tau: float
    roundrobin_tau: float
    swiss_order: tuple[str, ...]
    roundrobin_order: tuple[str, ...]


@dataclass(frozen=True)
class VarianceSummary:
    """Spread of Swiss outcomes when one randomness source is resampled."""

    source: str
    taus: tuple[float, ...]
    tau_mean: float
    tau_std: float
    elo_std_mean: float


@dataclass(frozen=True)
class SimulationReport:
    planted: tuple[str, ...]
    noise: float
    n_questions: int
    rounds: int
    stratified: bool
    runs: tuple[FidelityRun, ...]
    swiss_tau_mean: float
    roundrobin_tau_mean: float
    variance: tuple[VarianceSummary, ...]


def run_fidelity(
    n_systems: int = 8,
    n_questions: int = 24,
    rounds: int = DEFAULT_FIDELITY_ROUNDS,
    noise: float = 0.0,
    seeds: Iterable[int] = range(10),
    replicates: int = 0,
    base_seed: int = 0,
    stratified: bool = True,
) -> SimulationReport:
    """Run the planted-order experiment across seeds.

    Per seed, one Swiss and one round-robin tournament are played and
    scored against the planted order. Profile level widths are set to
    1/n_questions so the stratified difficulty grid separates adjacent
    ranks on exactly three questions per rank step. With replicates > 1,
    the variance decomposition reruns Swiss on i.i.d. difficulty draws,
    holding the question sample fixed while resampling judge noise and
    vice versa.
    """
    if n_questions < 3 * n_systems:
        raise ConfigError("need at least 3 * n_systems questions for valid planted profiles")
    profiles = ordered_profiles(n_systems, level_width=1.0 / n_questions)
    planted = tuple(sorted(profiles))
    dataset = synthetic_dataset(n_questions)
    answers = synthetic_answers(planted, dataset)

    runs: list[FidelityRun] = []
    for seed in seeds:
        difficulties = stratified_difficulties(dataset, seed) if stratified else None
        backend = make_category_oracle(
            profiles, noise=noise, seed=seed, difficulties=difficulties
        )
        swiss = run_tournament(planted, answers, dataset, backend, rounds=rounds, mode=Mode.SWISS)
        robin = run_tournament(planted, answers, dataset, backend, mode=Mode.ROUND_ROBIN)
        runs.append(
            FidelityRun(
                seed=seed,
                swiss_tau=kendall_tau(swiss.final_order, planted),
                roundrobin_tau=kendall_tau(robin.final_order, planted),
                swiss_order=swiss.final_order,
                roundrobin_order=robin.final_order,
            )
        )
    if not runs:
        raise ConfigError("at least one seed is required")

    variance: list[VarianceSummary] = []
    if replicates > 1:
        variance.append(
            _variance_summary(
                "judge_noise",
                planted,
                dataset,
                answers,
                profiles,
                rounds,
                noise,
                [(base_seed, base_seed + 1 + r) for r in range(replicates)],
            )
        )
        variance.append(
            _variance_summary(
                "question_sample",
                planted,
                dataset,
                answers,
                profiles,
                rounds,
                noise,
                [(base_seed + 1 + r, base_seed) for r in range(replicates)],
            )
        )

    return SimulationReport(
        planted=planted,
        noise=noise,
        n_questions=n_questions,
        rounds=rounds,
        stratified=stratified,
        runs=tuple(runs),
        swiss_tau_mean=statistics.fmean(run.swiss_tau for run in runs),
        roundrobin_tau_mean=statistics.fmean(run.roundrobin_tau for run in runs),
        variance=tuple(variance),
    )


def _variance_summary(
    source: str,
    planted: tuple[str, ...],
    dataset: list[QAPair],
    answers: dict[str, dict[str, SystemAnswer]],
    profiles: dict[str, CategoryProfile],
    rounds: int,
    noise: float,
    seed_pairs: list[tuple[int, int]],
) -> VarianceSummary:
    taus: list[float] = []
    ratings: list[dict[str, float]] = []
    for seed, noise_seed in seed_pairs:
        backend = make_category_oracle(profiles, noise=noise, seed=seed, noise_seed=noise_seed)
        result = run_tournament(
            planted, answers, dataset, backend, rounds=rounds, mode=Mode.SWISS
        )
        taus.append(kendall_tau(result.final_order, planted))
        ratings.append(result.final_ratings)
    elo_std_mean = statistics.fmean(
        statistics.pstdev([snapshot[sid] for snapshot in ratings]) for sid in planted
    )
    return VarianceSummary(
        source=source,
        taus=tuple(taus),
        tau_mean=statistics.fmean(taus),
        tau_std=statistics.pstdev(taus),
        elo_std_mean=elo_std_mean,
    )
