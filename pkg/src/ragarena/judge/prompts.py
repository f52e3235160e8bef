"""Two-stage judge prompt construction.

Stage I asks the judge to compare both answers against the reference
answer and each system's own retrieved passages, grading each on the
four-level quality hierarchy. Stage II replays that analysis and asks
for a one-token verdict from {A, B, Tie}, which is where decision
logprobs are read.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ragarena.errors import DataError
from ragarena.judge.types import QAPair, SystemAnswer

ANALYSIS_SLOT = "<<ANALYSIS>>"
"""Marker in a built decision prompt where the Stage-I output is inserted."""

NO_CONTEXT_MARKER = "(no retrieved context)"

_ANALYSIS_TEMPLATE = """\
You are an impartial referee for retrieval-augmented question answering. \
Two systems answered the same question, each using its own retrieved passages. \
Compare the quality of the two answers.

Question:
{question}

Reference answer:
{reference_answer}

Answer A:
{answer_a}

Passages retrieved for answer A:
{contexts_a}

Answer B:
{answer_b}

Passages retrieved for answer B:
{contexts_b}

Judge each answer on:
1. Accuracy: does it state the key facts of the reference answer without contradicting it?
2. Completeness: does it address every part of the question?
3. Relevance: does it stay on the question, without unsupported or off-topic material?

Grade each answer as one of: completely correct, partially correct, \
insufficient information, completely incorrect. Ranking rules: completely \
correct beats partially correct, which beats insufficient information, which \
beats completely incorrect. If one side gives an answer while the other \
reports insufficient information, decide by whether the answering side is \
actually correct.

Work through the comparison step by step, citing the retrieved passages where \
they matter, and state which answer is better on the last line."""

_DECISION_TEMPLATE = """\
You are an impartial referee for retrieval-augmented question answering. \
Two systems answered the same question, each using its own retrieved passages.

Question:
{question}

Reference answer:
{reference_answer}

Answer A:
{answer_a}

Passages retrieved for answer A:
{contexts_a}

Answer B:
{answer_b}

Passages retrieved for answer B:
{contexts_b}

A detailed comparison of the two answers:
{analysis}

Based on this comparison, which answer is better? \
Reply with exactly one token: A, B, or Tie."""


@dataclass(frozen=True)
class PromptTemplates:
    """Template pair for the two judge calls.

    Placeholders: {question}, {reference_answer}, {answer_a}, {answer_b},
    {contexts_a}, {contexts_b}; the decision template additionally takes
    {analysis}. Literal braces in custom templates must be doubled.
    """

    analysis_template: str = _ANALYSIS_TEMPLATE
    decision_template: str = _DECISION_TEMPLATE

    @property
    def version(self) -> str:
        """Content hash identifying this template pair."""
        digest = hashlib.sha256()
        digest.update(self.analysis_template.encode("utf-8"))
        digest.update(b"\x1f")
        digest.update(self.decision_template.encode("utf-8"))
        return digest.hexdigest()


DEFAULT_TEMPLATES = PromptTemplates()


@dataclass(frozen=True)
class PromptBundle:
    """Rendered prompts for one ordered comparison.

    The decision prompt still contains the ANALYSIS_SLOT marker because
    the Stage-I output does not exist until the first call returns;
    render_decision() completes it.
    """

    analysis_prompt: str
    decision_prompt: str
    prompt_version: str

    def render_decision(self, analysis: str) -> str:
        """Insert the Stage-I analysis into the decision prompt."""
        return self.decision_prompt.replace(ANALYSIS_SLOT, analysis)


def _render_contexts(contexts: tuple[str, ...]) -> str:
    if not contexts:
        return NO_CONTEXT_MARKER
    return "\n".join(f"{i}. {passage}" for i, passage in enumerate(contexts, start=1))


def build_prompts(
    qa: QAPair,
    answer_first: SystemAnswer,
    answer_second: SystemAnswer,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> PromptBundle:
    """Render both stage prompts for one ordered answer pair.

    Deterministic: identical inputs produce byte-identical prompts. The
    first answer is presented as A, the second as B.
    """
    for answer in (answer_first, answer_second):
        if answer.question_id != qa.id:
            raise DataError(
                f"answer from system {answer.system_id!r} is for question "
                f"{answer.question_id!r}, not {qa.id!r}"
            )
    fields = {
        "question": qa.question,
        "reference_answer": qa.reference_answer,
        "answer_a": answer_first.answer_text,
        "answer_b": answer_second.answer_text,
        "contexts_a": _render_contexts(answer_first.contexts),
        "contexts_b": _render_contexts(answer_second.contexts),
    }
    analysis_prompt = templates.analysis_template.format(**fields)
    decision_prompt = templates.decision_template.format(analysis=ANALYSIS_SLOT, **fields)
    return PromptBundle(analysis_prompt, decision_prompt, templates.version)
