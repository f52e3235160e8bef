"""Pure numeric core for pairwise judgment scoring.

Converts decision-token logits into a probability distribution over
{A, B, Tie}, measures judge confidence as the gap between the two
largest probabilities, and dispatches between a decisive (hard) and a
probability-proportional (soft) pairwise score. Also provides the
deterministic four-level answer-quality hierarchy used by synthetic
judges.

Everything here is a stateless pure function over immutable values and
is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

DEFAULT_CONFIDENCE_THRESHOLD = 0.1
"""Margin at or above which a judgment is treated as high-confidence.

Configurable per call; recalibrate for new domains.
"""

DEGENERATE_SCORE_EPS = 1e-9
"""Below this combined A+B mass, soft scoring falls back to an even split."""

_SUM_TOL = 1e-9


class JudgmentToken(str, Enum):
    """Closed decision vocabulary: no other verdict values are representable."""

    A = "A"
    B = "B"
    TIE = "Tie"

    def swapped(self) -> "JudgmentToken":
        """The same verdict with the two answer positions exchanged."""
        if self is JudgmentToken.A:
            return JudgmentToken.B
        if self is JudgmentToken.B:
            return JudgmentToken.A
        return JudgmentToken.TIE


class ScoreMode(str, Enum):
    """Which scoring scheme produced a PairScore."""

    HARD = "hard"
    SOFT = "soft"


class AnswerCategory(IntEnum):
    """Answer-quality hierarchy with a strict total order.

    Fully correct beats everything; partially correct beats insufficient
    and incorrect; an explicit "I don't know" still beats an answer that
    is flat wrong.
    """

    INCORRECT = 0
    INSUFFICIENT = 1
    PARTIALLY_CORRECT = 2
    FULLY_CORRECT = 3

    @classmethod
    def from_name(cls, name: str) -> "AnswerCategory":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown answer category: {name!r}") from None


@dataclass(frozen=True)
class LogitTriple:
    """Raw decision logits for the tokens A, B and Tie. Must be finite."""

    l_a: float
    l_b: float
    l_tie: float

    def __post_init__(self) -> None:
        for name, value in (("l_a", self.l_a), ("l_b", self.l_b), ("l_tie", self.l_tie)):
            if not math.isfinite(value):
                raise ValueError(f"logit {name} must be finite, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.l_a, self.l_b, self.l_tie)


@dataclass(frozen=True)
class ProbTriple:
    """Probability distribution over {A, B, Tie}: components in [0, 1], sum 1."""

    p_a: float
    p_b: float
    p_tie: float

    def __post_init__(self) -> None:
        for name, value in (("p_a", self.p_a), ("p_b", self.p_b), ("p_tie", self.p_tie)):
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"probability {name} out of [0, 1]: {value!r}")
        total = self.p_a + self.p_b + self.p_tie
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities must sum to 1, got {total!r}")

    @classmethod
    def from_raw(cls, p_a: float, p_b: float, p_tie: float) -> "ProbTriple":
        """Build a distribution from masses that may not sum to one.

        Judge APIs report truncated top-k masses (e.g. 0.83/0.00/0.16
        summing to 0.99); renormalize rather than reject them.
        """
        for value in (p_a, p_b, p_tie):
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"raw probability mass must be finite and >= 0, got {value!r}")
        total = p_a + p_b + p_tie
        if total <= 0.0:
            raise ValueError("raw probability masses sum to zero")
        return cls(p_a / total, p_b / total, p_tie / total)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_a, self.p_b, self.p_tie)


@dataclass(frozen=True)
class PairScore:
    """Pairwise score (s_a, s_b) awarded to the two answers; always sums to 1."""

    s_a: float
    s_b: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if abs(self.s_a + self.s_b - 1.0) > _SUM_TOL:
            raise ValueError(f"pair score must sum to 1, got {self.s_a + self.s_b!r}")

    def swapped(self) -> "PairScore":
        return PairScore(self.s_b, self.s_a, degenerate=self.degenerate)


@dataclass(frozen=True)
class ScoredVerdict:
    """One pairwise judgment, fully scored.

    Carries the probability distribution, the confidence margin, which
    scheme scored it, the argmax decision, and the resulting PairScore,
    plus the judge-side artifacts (reasoning trace, raw decision-position
    logprobs, prompt version) filled in by the judge layer.
    """

    logits: LogitTriple
    distribution: ProbTriple
    margin: float
    mode: ScoreMode
    decision: JudgmentToken
    score: PairScore
    reasoning_trace: str = ""
    raw_logprobs: tuple[tuple[str, float], ...] = ()
    prompt_version: str = ""
    swap_applied: bool = False
    swap_disagreement: bool = False


def softmax_distribution(logits: LogitTriple) -> ProbTriple:
    """Exp-normalize a logit triple into a probability distribution.

    Subtracts the maximum logit before exponentiation, so arbitrarily
    shifted inputs are safe and produce identical output.
    """
    top = max(logits.as_tuple())
    exps = tuple(math.exp(value - top) for value in logits.as_tuple())
    total = sum(exps)
    return ProbTriple(exps[0] / total, exps[1] / total, exps[2] / total)


def confidence_margin(dist: ProbTriple) -> float:
    """Gap between the largest and second-largest probabilities, in [0, 1]."""
    first, second, _ = sorted(dist.as_tuple(), reverse=True)
    return first - second


def argmax_token(dist: ProbTriple) -> JudgmentToken:
    """The winning token, with exact ties resolved to Tie.

    An exact A/B tie is semantically a tie, and a tie involving the Tie
    token is one as well; exact equality is measure-zero under real
    judges, so this rule only matters for synthetic inputs.
    """
    if dist.p_a > dist.p_b and dist.p_a > dist.p_tie:
        return JudgmentToken.A
    if dist.p_b > dist.p_a and dist.p_b > dist.p_tie:
        return JudgmentToken.B
    return JudgmentToken.TIE


def hard_score(dist: ProbTriple) -> PairScore:
    """Decisive scoring: winner takes 1, a tie splits evenly."""
    decision = argmax_token(dist)
    if decision is JudgmentToken.A:
        return PairScore(1.0, 0.0)
    if decision is JudgmentToken.B:
        return PairScore(0.0, 1.0)
    return PairScore(0.5, 0.5)


def soft_score(dist: ProbTriple) -> PairScore:
    """Probability-proportional scoring.

    The tie mass is redistributed between A and B in proportion to their
    own probabilities, so the two scores still sum to one. When nearly
    all mass sits on Tie (A+B below DEGENERATE_SCORE_EPS) the proportion
    is undefined and the score falls back to an even split, flagged as
    degenerate.
    """
    pair_mass = dist.p_a + dist.p_b
    if pair_mass < DEGENERATE_SCORE_EPS:
        return PairScore(0.5, 0.5, degenerate=True)
    s_a = dist.p_a + dist.p_tie * dist.p_a / pair_mass
    s_b = dist.p_b + dist.p_tie * dist.p_b / pair_mass
    return PairScore(s_a, s_b)


def score_distribution(
    dist: ProbTriple,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    logits: LogitTriple | None = None,
) -> ScoredVerdict:
    """Score an already-normalized distribution.

    Entry point for externally supplied probability triples (renormalize
    them via ProbTriple.from_raw first). A margin at or above the
    threshold dispatches to hard scoring; below it, to soft scoring.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"confidence threshold must lie in (0, 1), got {threshold!r}")
    margin = confidence_margin(dist)
    hard = margin >= threshold
    score = hard_score(dist) if hard else soft_score(dist)
    if logits is None:
        logits = LogitTriple(
            _safe_log(dist.p_a), _safe_log(dist.p_b), _safe_log(dist.p_tie)
        )
    return ScoredVerdict(
        logits=logits,
        distribution=dist,
        margin=margin,
        mode=ScoreMode.HARD if hard else ScoreMode.SOFT,
        decision=argmax_token(dist),
        score=score,
    )


def score_judgment(
    logits: LogitTriple, threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
) -> ScoredVerdict:
    """Full scoring pipeline: softmax, margin, dispatch, argmax decision."""
    return score_distribution(softmax_distribution(logits), threshold, logits=logits)


def category_compare(a: AnswerCategory, b: AnswerCategory) -> JudgmentToken:
    """Deterministic verdict from the answer-quality hierarchy."""
    if a > b:
        return JudgmentToken.A
    if a < b:
        return JudgmentToken.B
    return JudgmentToken.TIE


def _safe_log(p: float) -> float:
    # Zero probabilities get a log-space floor so LogitTriple stays finite.
    return math.log(p) if p > 0.0 else -745.0
