"""evaluate_pair tests: two-stage flow, caching, position-swap mitigation."""

import math

import pytest

from ragarena.errors import DataError, JudgeProtocolError
from ragarena.judge.backends import ScriptedBackend, ScriptedReply
from ragarena.judge.evaluate import EvaluateOptions, evaluate_pair, verdict_cache_key
from ragarena.judge.prompts import DEFAULT_TEMPLATES
from ragarena.judge.types import SystemAnswer
from ragarena.scoring import JudgmentToken, PairScore, ScoreMode
from ragarena.store import VerdictCache

from conftest import APPENDIX_ANALYSIS, APPENDIX_LOGPROBS, make_dataset


def _pair(qa):
    return (
        SystemAnswer.create("sysA", qa.id, "alpha answer", ("alpha passage",)),
        SystemAnswer.create("sysB", qa.id, "beta answer", ("beta passage",)),
    )


SHARP_A = (("A", math.log(0.9)), ("B", math.log(0.05)), ("Tie", math.log(0.05)))
SHARP_B = (("B", math.log(0.9)), ("A", math.log(0.05)), ("Tie", math.log(0.05)))


def test_scripted_logits_two_zero_zero():
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    backend = ScriptedBackend(ScriptedReply((("A", 2.0), ("B", 0.0), ("Tie", 0.0))))
    verdict = evaluate_pair(backend, qa, ans_a, ans_b)
    assert verdict.decision is JudgmentToken.A
    assert verdict.mode is ScoreMode.HARD
    # (e^2 - 1) / (e^2 + 2), evaluated independently.
    assert verdict.margin == pytest.approx(0.6804790632423978, abs=1e-9)
    assert verdict.score == PairScore(1.0, 0.0)


def test_appendix_replay(appendix_backend):
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    verdict = evaluate_pair(appendix_backend, qa, ans_a, ans_b)
    assert verdict.decision is JudgmentToken.A
    assert verdict.mode is ScoreMode.HARD
    assert verdict.margin == pytest.approx(0.67, abs=0.01)
    assert verdict.score == PairScore(1.0, 0.0)
    assert verdict.reasoning_trace == APPENDIX_ANALYSIS
    assert verdict.raw_logprobs == APPENDIX_LOGPROBS
    assert verdict.prompt_version == DEFAULT_TEMPLATES.version


def test_answers_must_match_question():
    qa, other = make_dataset(2)
    ans_a, _ = _pair(qa)
    stray = SystemAnswer.create("sysB", other.id, "answer to the wrong question")
    with pytest.raises(DataError):
        evaluate_pair(ScriptedBackend(ScriptedReply(SHARP_A)), qa, ans_a, stray)


def test_position_swap_neutralizes_first_position_bias():
    # A judge that always prefers whichever answer came first.
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    backend = ScriptedBackend(lambda call: ScriptedReply(SHARP_A, "first one looked best"))
    verdict = evaluate_pair(
        backend, qa, ans_a, ans_b, EvaluateOptions(position_swap=True)
    )
    assert verdict.score == PairScore(0.5, 0.5)
    assert verdict.decision is JudgmentToken.TIE
    assert verdict.swap_applied
    assert verdict.swap_disagreement


def test_position_swap_agreement_keeps_decision():
    # A judge keyed on content: sysA's answer wins regardless of position.
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)

    def prefer_sys_a(call):
        return ScriptedReply(SHARP_A if call.first.system_id == "sysA" else SHARP_B)

    backend = ScriptedBackend(prefer_sys_a)
    verdict = evaluate_pair(backend, qa, ans_a, ans_b, EvaluateOptions(position_swap=True))
    assert verdict.decision is JudgmentToken.A
    assert verdict.score == PairScore(1.0, 0.0)
    assert not verdict.swap_disagreement


def test_swap_consistency_between_orders():
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)

    def prefer_sys_a(call):
        return ScriptedReply(SHARP_A if call.first.system_id == "sysA" else SHARP_B)

    backend = ScriptedBackend(prefer_sys_a)
    options = EvaluateOptions(position_swap=True)
    forward = evaluate_pair(backend, qa, ans_a, ans_b, options)
    backward = evaluate_pair(backend, qa, ans_b, ans_a, options)
    assert forward.score.s_a == pytest.approx(backward.score.s_b, abs=1e-12)
    assert forward.score.s_b == pytest.approx(backward.score.s_a, abs=1e-12)
    assert forward.decision is backward.decision.swapped()


def test_cache_idempotence(tmp_path, appendix_backend):
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    options = EvaluateOptions(cache=VerdictCache(tmp_path / "cache"))
    first = evaluate_pair(appendix_backend, qa, ans_a, ans_b, options)
    second = evaluate_pair(appendix_backend, qa, ans_a, ans_b, options)
    assert appendix_backend.analyze_calls == 1
    assert appendix_backend.decide_calls == 1
    assert first == second


def test_cache_distinguishes_presentation_order(tmp_path, appendix_backend):
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    options = EvaluateOptions(cache=VerdictCache(tmp_path / "cache"))
    evaluate_pair(appendix_backend, qa, ans_a, ans_b, options)
    evaluate_pair(appendix_backend, qa, ans_b, ans_a, options)
    assert appendix_backend.decide_calls == 2


def test_cache_key_sensitivity():
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    fingerprint = {"kind": "scripted", "seed": 0}
    base = verdict_cache_key(qa, ans_a, ans_b, fingerprint, "v1")
    changed_answer = SystemAnswer.create(
        ans_a.system_id, ans_a.question_id, ans_a.answer_text + "!", ans_a.contexts
    )
    assert verdict_cache_key(qa, changed_answer, ans_b, fingerprint, "v1") != base
    assert verdict_cache_key(qa, ans_a, ans_b, fingerprint, "v2") != base
    assert verdict_cache_key(qa, ans_a, ans_b, {"kind": "scripted", "seed": 1}, "v1") != base
    assert verdict_cache_key(qa, ans_a, ans_b, fingerprint, "v1") == base


def test_protocol_failure_is_not_cached(tmp_path):
    qa = make_dataset(1)[0]
    ans_a, ans_b = _pair(qa)
    backend = ScriptedBackend(lambda call: ScriptedReply((), "no decision tokens"))
    cache_dir = tmp_path / "cache"
    options = EvaluateOptions(cache=VerdictCache(cache_dir))
    with pytest.raises(JudgeProtocolError):
        evaluate_pair(backend, qa, ans_a, ans_b, options)
    assert not list(cache_dir.rglob("*.json"))
