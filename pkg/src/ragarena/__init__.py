"""Evaluation orchestration for RAG systems.

Pairwise, evidence-coupled judging with confidence-aware {A, B, Tie}
scoring, Swiss-system Elo tournaments for multi-system ranking,
single-system baseline positioning, and human-agreement metrics.
"""

__version__ = "0.1.0"

from ragarena.agreement import (
    AgreementReport,
    ConfusionMatrix,
    DimensionScores,
    agreement_report,
    cohens_kappa,
    confusion,
    majority_label,
    ragas_aggregate,
    scores_to_label,
)
from ragarena.errors import (
    ArenaError,
    ConfigError,
    DataError,
    JudgeProtocolError,
    PairingExhaustedError,
    TransportError,
    UndefinedKappaError,
)
from ragarena.judge import (
    EvaluateOptions,
    JudgeBackendDescriptor,
    QAPair,
    RemoteBackend,
    ScriptedBackend,
    ScriptedReply,
    SystemAnswer,
    backend_from_config,
    build_prompts,
    evaluate_pair,
    extract_decision_logits,
    group_answers,
    make_category_oracle,
)
from ragarena.ranking import (
    BaselineReport,
    EloState,
    MatchResult,
    Mode,
    TournamentResult,
    UpsetRule,
    baseline_evaluate,
    elo_update,
    expected_score,
    kendall_tau,
    run_tournament,
    swiss_pairings,
)
from ragarena.scoring import (
    AnswerCategory,
    JudgmentToken,
    LogitTriple,
    PairScore,
    ProbTriple,
    ScoredVerdict,
    ScoreMode,
    category_compare,
    confidence_margin,
    hard_score,
    score_distribution,
    score_judgment,
    soft_score,
    softmax_distribution,
)
from ragarena.simulate import run_fidelity
from ragarena.store import (
    RunConfig,
    VerdictCache,
    emit_reports,
    ingest_answers,
    ingest_dataset,
    ingest_dimension_scores,
    ingest_labels,
)

__all__ = [
    "AgreementReport",
    "AnswerCategory",
    "ArenaError",
    "BaselineReport",
    "ConfigError",
    "ConfusionMatrix",
    "DataError",
    "DimensionScores",
    "EloState",
    "EvaluateOptions",
    "JudgeBackendDescriptor",
    "JudgeProtocolError",
    "JudgmentToken",
    "LogitTriple",
    "MatchResult",
    "Mode",
    "PairScore",
    "PairingExhaustedError",
    "ProbTriple",
    "QAPair",
    "RemoteBackend",
    "RunConfig",
    "ScoreMode",
    "ScoredVerdict",
    "ScriptedBackend",
    "ScriptedReply",
    "SystemAnswer",
    "TournamentResult",
    "TransportError",
    "UndefinedKappaError",
    "UpsetRule",
    "VerdictCache",
    "agreement_report",
    "backend_from_config",
    "baseline_evaluate",
    "build_prompts",
    "category_compare",
    "cohens_kappa",
    "confidence_margin",
    "confusion",
    "elo_update",
    "emit_reports",
    "evaluate_pair",
    "expected_score",
    "extract_decision_logits",
    "group_answers",
    "hard_score",
    "ingest_answers",
    "ingest_dataset",
    "ingest_dimension_scores",
    "ingest_labels",
    "kendall_tau",
    "majority_label",
    "make_category_oracle",
    "ragas_aggregate",
    "run_fidelity",
    "run_tournament",
    "score_distribution",
    "score_judgment",
    "scores_to_label",
    "soft_score",
    "softmax_distribution",
    "swiss_pairings",
]
