"""Pairwise verdict production: the two-stage judge pipeline.

Runs Stage I (analysis completion) and Stage II (one-token decision with
log-probabilities) against a backend, converts the decision-position
top-k list into logits over {A, B, Tie}, applies confidence-aware
scoring, and optionally mitigates position bias by judging both
presentation orders.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Protocol

from ragarena.errors import DataError, JudgeProtocolError
from ragarena.judge.backends import JudgeBackend, TokenLogprobs
from ragarena.judge.prompts import DEFAULT_TEMPLATES, PromptTemplates, build_prompts
from ragarena.judge.types import JudgeCall, QAPair, SystemAnswer
from ragarena.scoring import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    JudgmentToken,
    LogitTriple,
    PairScore,
    ScoredVerdict,
    score_judgment,
)

DEFAULT_FLOOR_OFFSET = 5.0
"""Log-space gap below the smallest observed logprob for absent tokens."""

_CANONICAL = {"a": "A", "b": "B", "tie": "Tie"}


class VerdictCacheLike(Protocol):
    """Anything that can persist verdicts keyed by content digest."""

    def lookup(self, key: str) -> ScoredVerdict | None: ...

    def put(self, key: str, verdict: ScoredVerdict) -> None: ...


@dataclass
class EvaluateOptions:
    """Knobs for evaluate_pair; defaults mirror the standard protocol."""

    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    position_swap: bool = False
    templates: PromptTemplates = field(default_factory=lambda: DEFAULT_TEMPLATES)
    cache: VerdictCacheLike | None = None
    floor_offset: float = DEFAULT_FLOOR_OFFSET


def extract_decision_logits(
    decision_position_logprobs: TokenLogprobs | list,
    floor_offset: float = DEFAULT_FLOOR_OFFSET,
) -> LogitTriple:
    """Collapse a decision-position top-k list into logits for A, B and Tie.

    Tokenizers disagree about case and leading whitespace, so the mass of
    every variant of a decision token (e.g. "A", " A", "a") is summed
    before taking the log. A decision token that never appears in the
    top-k list gets a floor logit of (minimum returned logprob minus
    floor_offset): strictly below everything observed, but finite.
    """
    if not decision_position_logprobs:
        raise JudgeProtocolError("decision-position logprob list is empty")
    masses = {"A": 0.0, "B": 0.0, "Tie": 0.0}
    floor = min(lp for _, lp in decision_position_logprobs) - floor_offset
    for token, logprob in decision_position_logprobs:
        canonical = _CANONICAL.get(token.strip().lower())
        if canonical is not None:
            masses[canonical] += math.exp(logprob)
    logits = {
        token: math.log(mass) if mass > 0.0 else floor for token, mass in masses.items()
    }
    return LogitTriple(logits["A"], logits["B"], logits["Tie"])


def verdict_cache_key(
    qa: QAPair,
    first: SystemAnswer,
    second: SystemAnswer,
    backend_fingerprint: dict,
    prompt_version: str,
) -> str:
    """Content digest identifying one ordered comparison.

    Covers the question, both answer texts and context lists in
    presentation order, the backend identity with its decoding
    parameters, and the prompt template version; any change yields a
    different digest.
    """
    payload = {
        "question_id": qa.id,
        "question": qa.question,
        "reference_answer": qa.reference_answer,
        "first_system": first.system_id,
        "first_answer": first.answer_text,
        "first_contexts": list(first.contexts),
        "second_system": second.system_id,
        "second_answer": second.answer_text,
        "second_contexts": list(second.contexts),
        "backend": backend_fingerprint,
        "prompt_version": prompt_version,
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _evaluate_oriented(
    backend: JudgeBackend,
    qa: QAPair,
    first: SystemAnswer,
    second: SystemAnswer,
    options: EvaluateOptions,
) -> ScoredVerdict:
    bundle = build_prompts(qa, first, second, options.templates)
    key = None
    if options.cache is not None:
        key = verdict_cache_key(qa, first, second, backend.fingerprint(), bundle.prompt_version)
        hit = options.cache.lookup(key)
        if hit is not None:
            return hit

    analysis = backend.analyze(JudgeCall(qa, first, second, bundle.analysis_prompt))
    decision_prompt = bundle.render_decision(analysis)
    logprobs = backend.decide(JudgeCall(qa, first, second, decision_prompt))
    logits = extract_decision_logits(logprobs, options.floor_offset)
    core = score_judgment(logits, options.threshold)
    verdict = replace(
        core,
        reasoning_trace=analysis,
        raw_logprobs=tuple((str(t), float(lp)) for t, lp in logprobs),
        prompt_version=bundle.prompt_version,
    )
    if options.cache is not None and key is not None:
        options.cache.put(key, verdict)
    return verdict


def _decision_from_score(score: PairScore) -> JudgmentToken:
    if score.s_a > score.s_b:
        return JudgmentToken.A
    if score.s_b > score.s_a:
        return JudgmentToken.B
    return JudgmentToken.TIE


def evaluate_pair(
    backend: JudgeBackend,
    qa: QAPair,
    ans_a: SystemAnswer,
    ans_b: SystemAnswer,
    options: EvaluateOptions | None = None,
) -> ScoredVerdict:
    """Judge one answer pair and return the scored verdict.

    With position_swap enabled, the pair is judged in both presentation
    orders; the swapped verdict is mapped back, the two PairScores are
    averaged, and disagreement between the two hard decisions is flagged.
    Verdicts are cached per presentation order when a cache is supplied;
    judge-protocol failures propagate before anything is cached.
    """
    options = options or EvaluateOptions()
    for answer in (ans_a, ans_b):
        if answer.question_id != qa.id:
            raise DataError(
                f"answer from system {answer.system_id!r} is for question "
                f"{answer.question_id!r}, not {qa.id!r}"
            )

    forward = _evaluate_oriented(backend, qa, ans_a, ans_b, options)
    if not options.position_swap:
        return forward

    reverse = _evaluate_oriented(backend, qa, ans_b, ans_a, options)
    mirrored = reverse.score.swapped()
    averaged = PairScore(
        (forward.score.s_a + mirrored.s_a) / 2.0,
        (forward.score.s_b + mirrored.s_b) / 2.0,
    )
    disagreement = forward.decision != reverse.decision.swapped()
    return replace(
        forward,
        score=averaged,
        decision=_decision_from_score(averaged),
        swap_applied=True,
        swap_disagreement=disagreement,
    )
