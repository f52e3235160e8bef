"""Shared fixtures: tiny datasets, answer sets, and canned judge replies."""

import math

import pytest

from ragarena.judge.backends import ScriptedBackend, ScriptedReply
from ragarena.judge.types import QAPair, SystemAnswer


def make_dataset(n: int = 3) -> list[QAPair]:
    return [
        QAPair.create(
            f"q{i + 1:03d}",
            f"What happened in event {i + 1}?",
            f"Reference summary of event {i + 1}.",
            {"outlet": "unit-test", "topic": "fixtures"},
        )
        for i in range(n)
    ]


def make_answers(systems, dataset, contexts=("some retrieved passage",)):
    return {
        sid: {
            qa.id: SystemAnswer.create(
                sid, qa.id, f"{sid} answer to {qa.id}", contexts
            )
            for qa in dataset
        }
        for sid in systems
    }


# Replay of the worked example: top-k masses 0.83 (A), 0.16 (Tie) and the
# 0.01 residual assigned to B; softmax of their logs recovers the masses.
APPENDIX_LOGPROBS = (
    ("A", math.log(0.83)),
    ("Tie", math.log(0.16)),
    ("B", math.log(0.01)),
)
APPENDIX_ANALYSIS = (
    "Answer A covers the acronym, the behavioral pattern, and the limitation "
    "caveat; answer B is accurate but leans on less focused evidence. A is better."
)


@pytest.fixture
def dataset():
    return make_dataset()


@pytest.fixture
def appendix_backend():
    return ScriptedBackend(ScriptedReply(APPENDIX_LOGPROBS, APPENDIX_ANALYSIS))
