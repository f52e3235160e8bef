"""Pairwise judging: prompt construction, judge backends, verdict production."""

from ragarena.judge.backends import (
    BackendKind,
    CategoryOracleBackend,
    JudgeBackend,
    JudgeBackendDescriptor,
    RemoteBackend,
    ScriptedBackend,
    ScriptedReply,
    backend_from_config,
    make_category_oracle,
)
from ragarena.judge.evaluate import (
    EvaluateOptions,
    evaluate_pair,
    extract_decision_logits,
    verdict_cache_key,
)
from ragarena.judge.prompts import (
    DEFAULT_TEMPLATES,
    PromptBundle,
    PromptTemplates,
    build_prompts,
)
from ragarena.judge.types import QAPair, SystemAnswer, group_answers

__all__ = [
    "BackendKind",
    "CategoryOracleBackend",
    "DEFAULT_TEMPLATES",
    "EvaluateOptions",
    "JudgeBackend",
    "JudgeBackendDescriptor",
    "PromptBundle",
    "PromptTemplates",
    "QAPair",
    "RemoteBackend",
    "ScriptedBackend",
    "ScriptedReply",
    "SystemAnswer",
    "backend_from_config",
    "build_prompts",
    "evaluate_pair",
    "extract_decision_logits",
    "group_answers",
    "make_category_oracle",
    "verdict_cache_key",
]
