"""Core data records for questions and system answers."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from ragarena.errors import DataError


@dataclass(frozen=True)
class QAPair:
    """A question with its reference answer; the unit of comparison."""

    id: str
    question: str
    reference_answer: str
    source_meta: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("QA pair id must be non-empty")
        if not self.question.strip():
            raise DataError(f"question for QA pair {self.id!r} is empty")
        if not self.reference_answer.strip():
            raise DataError(f"reference answer for QA pair {self.id!r} is empty")

    @classmethod
    def create(
        cls,
        id: str,
        question: str,
        reference_answer: str,
        source_meta: dict[str, str] | None = None,
    ) -> "QAPair":
        meta = tuple(sorted((source_meta or {}).items()))
        return cls(id, question, reference_answer, meta)

    @property
    def meta(self) -> dict[str, str]:
        return dict(self.source_meta)


@dataclass(frozen=True)
class SystemAnswer:
    """One system's generated answer plus its retrieved passages for a question."""

    system_id: str
    question_id: str
    answer_text: str
    contexts: tuple[str, ...] = ()

    @classmethod
    def create(
        cls,
        system_id: str,
        question_id: str,
        answer_text: str,
        contexts: Iterable[str] = (),
    ) -> "SystemAnswer":
        return cls(system_id, question_id, answer_text, tuple(contexts))


def group_answers(answers: Iterable[SystemAnswer]) -> dict[str, dict[str, SystemAnswer]]:
    """Index answers as system_id -> question_id -> answer.

    A system answering the same question twice is a data defect and is
    rejected rather than silently overwritten.
    """
    grouped: dict[str, dict[str, SystemAnswer]] = {}
    for answer in answers:
        per_system = grouped.setdefault(answer.system_id, {})
        if answer.question_id in per_system:
            raise DataError(
                f"system {answer.system_id!r} has multiple answers "
                f"for question {answer.question_id!r}"
            )
        per_system[answer.question_id] = answer
    return grouped


@dataclass(frozen=True)
class JudgeCall:
    """Context handed to a backend for one stage of one comparison.

    Remote backends only read the prompt; local mock backends key their
    deterministic behavior off the structured fields.
    """

    qa: QAPair
    first: SystemAnswer
    second: SystemAnswer
    prompt: str
