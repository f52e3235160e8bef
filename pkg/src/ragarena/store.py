"""Persistence and ingestion: datasets, answer sets, labels, cache, reports.

File formats are line-delimited JSON (one UTF-8 object per line) for all
inputs, and a JSON run record plus CSV tables for outputs. Every number
in the CSV tables can be re-derived from the run record alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, fields
from pathlib import Path

from ragarena.agreement import LABELS, AgreementReport, DimensionScores
from ragarena.errors import ConfigError, DataError
from ragarena.judge.types import QAPair, SystemAnswer
from ragarena.ranking import BaselineReport, MatchResult, TIER_ANCHORS, TournamentResult
from ragarena.scoring import (
    JudgmentToken,
    LogitTriple,
    PairScore,
    ProbTriple,
    ScoreMode,
    ScoredVerdict,
)

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# JSONL ingestion


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line number, record) for every non-blank line; locate failures."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: record must be a JSON object")
            yield lineno, record


def _require(record: dict, name: str, path: str | Path, lineno: int) -> object:
    if name not in record:
        raise DataError(f"{path}:{lineno}: missing required field {name!r}")
    return record[name]


def ingest_dataset(path: str | Path) -> list[QAPair]:
    """Load and validate QA pairs. Record fields: id, question, reference_answer, source_meta."""
    pairs: list[QAPair] = []
    seen: set[str] = set()
    for lineno, record in read_jsonl(path):
        qa_id = str(_require(record, "id", path, lineno))
        if qa_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate QA pair id {qa_id!r}")
        seen.add(qa_id)
        meta = record.get("source_meta", {})
        if not isinstance(meta, dict):
            raise DataError(f"{path}:{lineno}: source_meta must be an object")
        try:
            pairs.append(
                QAPair.create(
                    qa_id,
                    str(_require(record, "question", path, lineno)),
                    str(_require(record, "reference_answer", path, lineno)),
                    {str(k): str(v) for k, v in meta.items()},
                )
            )
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not pairs:
        raise DataError(f"{path}: dataset contains no records")
    return pairs


def ingest_answers(path: str | Path) -> list[SystemAnswer]:
    """Load system answers. Record fields: system_id, question_id, answer_text, contexts."""
    answers: list[SystemAnswer] = []
    for lineno, record in read_jsonl(path):
        contexts = record.get("contexts", [])
        if not isinstance(contexts, list) or any(not isinstance(c, str) for c in contexts):
            raise DataError(f"{path}:{lineno}: contexts must be an array of strings")
        answers.append(
            SystemAnswer.create(
                str(_require(record, "system_id", path, lineno)),
                str(_require(record, "question_id", path, lineno)),
                str(_require(record, "answer_text", path, lineno)),
                contexts,
            )
        )
    if not answers:
        raise DataError(f"{path}: answer file contains no records")
    return answers


def _parse_label(raw: object, path: str | Path, lineno: int) -> JudgmentToken:
    try:
        return JudgmentToken(str(raw))
    except ValueError:
        raise DataError(
            f"{path}:{lineno}: label must be one of A, B, Tie; got {raw!r}"
        ) from None


def ingest_labels(path: str | Path) -> dict[str, JudgmentToken]:
    """Load {A, B, Tie} labels keyed by question id.

    Multiple records for one question are treated as per-annotator votes
    and majority-reduced, with voting ties resolving to Tie.
    """
    from ragarena.agreement import majority_label

    votes: dict[str, list[JudgmentToken]] = {}
    for lineno, record in read_jsonl(path):
        qid = str(_require(record, "question_id", path, lineno))
        votes.setdefault(qid, []).append(_parse_label(_require(record, "label", path, lineno), path, lineno))
    if not votes:
        raise DataError(f"{path}: label file contains no records")
    return {qid: majority_label(vote) for qid, vote in votes.items()}


@dataclass(frozen=True)
class DimensionRecord:
    system_id: str
    question_id: str
    scores: DimensionScores


def ingest_dimension_scores(path: str | Path) -> list[DimensionRecord]:
    """Load per-system, per-question dimension scores."""
    records: list[DimensionRecord] = []
    for lineno, record in read_jsonl(path):
        try:
            scores = DimensionScores(
                float(_require(record, "faithfulness", path, lineno)),
                float(_require(record, "answer_relevancy", path, lineno)),
                float(_require(record, "context_relevance", path, lineno)),
            )
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad dimension score: {exc}") from exc
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        records.append(
            DimensionRecord(
                str(_require(record, "system_id", path, lineno)),
                str(_require(record, "question_id", path, lineno)),
                scores,
            )
        )
    if not records:
        raise DataError(f"{path}: dimension-score file contains no records")
    return records


# --------------------------------------------------------------------------
# Verdict serialization and the content-addressed cache


def verdict_to_dict(verdict: ScoredVerdict) -> dict:
    return {
        "logits": list(verdict.logits.as_tuple()),
        "distribution": list(verdict.distribution.as_tuple()),
        "margin": verdict.margin,
        "mode": verdict.mode.value,
        "decision": verdict.decision.value,
        "score": {
            "s_a": verdict.score.s_a,
            "s_b": verdict.score.s_b,
            "degenerate": verdict.score.degenerate,
        },
        "reasoning_trace": verdict.reasoning_trace,
        "raw_logprobs": [[token, lp] for token, lp in verdict.raw_logprobs],
        "prompt_version": verdict.prompt_version,
        "swap_applied": verdict.swap_applied,
        "swap_disagreement": verdict.swap_disagreement,
    }


def verdict_from_dict(payload: dict) -> ScoredVerdict:
    score = payload["score"]
    return ScoredVerdict(
        logits=LogitTriple(*payload["logits"]),
        distribution=ProbTriple(*payload["distribution"]),
        margin=payload["margin"],
        mode=ScoreMode(payload["mode"]),
        decision=JudgmentToken(payload["decision"]),
        score=PairScore(score["s_a"], score["s_b"], degenerate=score.get("degenerate", False)),
        reasoning_trace=payload["reasoning_trace"],
        raw_logprobs=tuple((str(t), float(lp)) for t, lp in payload["raw_logprobs"]),
        prompt_version=payload["prompt_version"],
        swap_applied=payload.get("swap_applied", False),
        swap_disagreement=payload.get("swap_disagreement", False),
    )


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class VerdictCache:
    """One file per digest under a two-level hex fan-out directory.

    Writers serialize through a lock and land entries with an atomic
    rename; a record that fails to parse is quarantined (renamed aside)
    and treated as a miss rather than poisoning the run.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path_for(self, key: str) -> Path:
        return self.root / key[:2] / key[2:4] / f"{key}.json"

    def lookup(self, key: str) -> ScoredVerdict | None:
        path = self._path_for(key)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            if payload.get("key") != key:
                raise ValueError("cache record key mismatch")
            return verdict_from_dict(payload["verdict"])
        except (ValueError, KeyError, TypeError) as exc:
            quarantine = path.with_suffix(".corrupt")
            os.replace(path, quarantine)
            logger.warning("quarantined corrupt cache record %s: %s", quarantine, exc)
            return None

    def put(self, key: str, verdict: ScoredVerdict) -> None:
        path = self._path_for(key)
        payload = json.dumps(
            {"key": key, "verdict": verdict_to_dict(verdict)},
            sort_keys=True,
            ensure_ascii=False,
        )
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            _write_atomic(path, payload.encode("utf-8"))


# --------------------------------------------------------------------------
# Run configuration


_CONFIG_KEYS = {
    "dataset": "dataset_path",
    "answers": "answers_paths",
    "backend": "backend",
    "mode": "mode",
    "rounds": "rounds",
    "k_factor": "k_factor",
    "threshold": "threshold",
    "delta": "delta",
    "position_swap": "position_swap",
    "upset": None,  # nested {enabled, beta}
    "seed": "seed",
    "output_dir": "output_dir",
    "cache_dir": "cache_dir",
    "max_workers": "max_workers",
    "gold_labels": "gold_labels_path",
    "pred_labels": "pred_labels_path",
    "pair": "pair",
    "baseline": "baseline_paths",
    "dimension_scores": "dimension_scores_path",
}


@dataclass
class RunConfig:
    """Effective run configuration; flag overrides win over the file."""

    dataset_path: str | None = None
    answers_paths: dict[str, str] = field(default_factory=dict)
    backend: dict = field(default_factory=dict)
    mode: str = "swiss"
    rounds: int = 4
    k_factor: float = 32.0
    threshold: float = 0.1
    delta: float = 0.15
    position_swap: bool = False
    upset_enabled: bool = False
    upset_beta: float = 0.5
    seed: int = 0
    output_dir: str = "out"
    cache_dir: str | None = None
    max_workers: int = 1
    gold_labels_path: str | None = None
    pred_labels_path: str | None = None
    pair: tuple[str, str] | None = None
    baseline_paths: dict[str, str] = field(default_factory=dict)
    dimension_scores_path: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")

        config = cls()
        for key, value in raw.items():
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            if key == "upset":
                if not isinstance(value, dict):
                    raise ConfigError("config key 'upset' must be an object")
                config.upset_enabled = bool(value.get("enabled", False))
                config.upset_beta = float(value.get("beta", 0.5))
            elif key == "pair":
                if not (isinstance(value, list) and len(value) == 2):
                    raise ConfigError("config key 'pair' must be a two-element list")
                config.pair = (str(value[0]), str(value[1]))
            else:
                setattr(config, _CONFIG_KEYS[key], value)
        return config

    def require_paths(self, *attributes: str) -> None:
        """Preflight existence check for the named path attributes."""
        missing: list[str] = []
        for attribute in attributes:
            value = getattr(self, attribute)
            if value is None:
                missing.append(f"{attribute} is not configured")
            elif isinstance(value, dict):
                if not value:
                    missing.append(f"{attribute} is not configured")
                missing.extend(
                    f"{attribute}[{name}]: no such file: {p}"
                    for name, p in value.items()
                    if not Path(p).exists()
                )
            elif not Path(value).exists():
                missing.append(f"{attribute}: no such file: {value}")
        if missing:
            raise ConfigError("; ".join(missing))

    def echo(self) -> dict:
        """Effective configuration as recorded in every run record."""
        payload = {}
        for spec in fields(self):
            value = getattr(self, spec.name)
            payload[spec.name] = list(value) if isinstance(value, tuple) else value
        return payload


# --------------------------------------------------------------------------
# Report emission


def _trace_digest(trace: str) -> str:
    return hashlib.sha256(trace.encode("utf-8")).hexdigest()


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable[object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _write_traces(out_dir: Path, matches: Iterable[MatchResult]) -> None:
    trace_dir = out_dir / "traces"
    written: set[str] = set()
    for match in matches:
        for verdict in match.verdicts:
            if not verdict.reasoning_trace:
                continue
            digest = _trace_digest(verdict.reasoning_trace)
            if digest in written:
                continue
            trace_dir.mkdir(parents=True, exist_ok=True)
            (trace_dir / f"{digest}.txt").write_text(
                verdict.reasoning_trace, encoding="utf-8"
            )
            written.add(digest)


def _prompt_versions(matches: Iterable[MatchResult]) -> list[str]:
    return sorted(
        {v.prompt_version for match in matches for v in match.verdicts if v.prompt_version}
    )


def _match_to_dict(match: MatchResult) -> dict:
    per_question = []
    for index, (qid, score) in enumerate(match.per_question):
        entry: dict = {
            "question_id": qid,
            "s_a": score.s_a,
            "s_b": score.s_b,
            "degenerate": score.degenerate,
        }
        if index < len(match.verdicts):
            verdict = match.verdicts[index]
            entry.update(
                mode=verdict.mode.value,
                margin=verdict.margin,
                decision=verdict.decision.value,
                prompt_version=verdict.prompt_version,
                swap_applied=verdict.swap_applied,
                swap_disagreement=verdict.swap_disagreement,
                trace_digest=_trace_digest(verdict.reasoning_trace)
                if verdict.reasoning_trace
                else None,
            )
        per_question.append(entry)
    return {
        "pair": list(match.pair),
        "n_questions": match.n_questions,
        "s_total_a": match.s_total_a,
        "per_question": per_question,
    }


def _audit_rows(round_index: int, match: MatchResult) -> Iterator[list[object]]:
    for index, (qid, score) in enumerate(match.per_question):
        verdict = match.verdicts[index] if index < len(match.verdicts) else None
        yield [
            round_index,
            match.pair[0],
            match.pair[1],
            qid,
            verdict.mode.value if verdict else "",
            f"{verdict.margin:.6f}" if verdict else "",
            verdict.decision.value if verdict else "",
            f"{score.s_a:.6f}",
            f"{score.s_b:.6f}",
            verdict.swap_applied if verdict else "",
            verdict.swap_disagreement if verdict else "",
            _trace_digest(verdict.reasoning_trace)
            if verdict and verdict.reasoning_trace
            else "",
        ]


_AUDIT_HEADER = [
    "round", "system_a", "system_b", "question_id", "mode", "margin",
    "decision", "s_a", "s_b", "swap_applied", "swap_disagreement", "trace_digest",
]


def emit_tournament_reports(
    result: TournamentResult, output_dir: str | Path, config: RunConfig | None = None
) -> list[Path]:
    if not result.rounds or result.total_matches == 0:
        raise DataError("refusing to emit a report for an empty tournament")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    standings = out / "standings.csv"
    _write_csv(
        standings,
        ["rank", "system_id", "final_elo"],
        (
            [rank, sid, f"{result.final_ratings[sid]:.4f}"]
            for rank, sid in enumerate(result.final_order, start=1)
        ),
    )
    rounds_csv = out / "rounds.csv"
    _write_csv(
        rounds_csv,
        ["round", "system_id", "rating_after"],
        (
            [record.index, sid, f"{rating:.4f}"]
            for record in result.rounds
            for sid, rating in sorted(record.ratings_after.items())
        ),
    )
    audit = out / "audit.csv"
    _write_csv(
        audit,
        _AUDIT_HEADER,
        (
            row
            for record in result.rounds
            for match in record.matches
            for row in _audit_rows(record.index, match)
        ),
    )
    _write_traces(out, (m for record in result.rounds for m in record.matches))

    record_path = out / "run_record.json"
    _dump_json(
        record_path,
        {
            "kind": "tournament",
            "mode": result.mode.value,
            "systems": list(result.systems),
            "k_factor": result.k_factor,
            "upset": {"enabled": result.upset.enabled, "beta": result.upset.beta},
            "rounds": [
                {
                    "index": record.index,
                    "pairings": [list(pair) for pair in record.pairings],
                    "bye": record.bye,
                    "matches": [_match_to_dict(match) for match in record.matches],
                    "ratings_after": record.ratings_after,
                }
                for record in result.rounds
            ],
            "final_ratings": result.final_ratings,
            "final_order": list(result.final_order),
            "total_matches": result.total_matches,
            "prompt_versions": _prompt_versions(
                m for record in result.rounds for m in record.matches
            ),
            "config": config.echo() if config else None,
        },
    )
    return [standings, rounds_csv, audit, record_path]


def emit_baseline_reports(
    report: BaselineReport, output_dir: str | Path, config: RunConfig | None = None
) -> list[Path]:
    if not report.tier_results:
        raise DataError("refusing to emit a report for an empty baseline run")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    tiers_csv = out / "baseline.csv"
    _write_csv(
        tiers_csv,
        ["tier", "anchor_elo", "wins", "losses", "ties", "mean_score"],
        (
            [
                tier,
                f"{TIER_ANCHORS[tier]:.1f}",
                tier_result.wins,
                tier_result.losses,
                tier_result.ties,
                f"{tier_result.mean_score:.6f}",
            ]
            for tier, tier_result in report.tier_results.items()
        ),
    )
    summary_csv = out / "baseline_summary.csv"
    _write_csv(summary_csv, ["target", "final_elo"], [[report.target, f"{report.final_elo:.4f}"]])
    audit = out / "audit.csv"
    _write_csv(
        audit,
        _AUDIT_HEADER,
        (
            row
            for tier_result in report.tier_results.values()
            for row in _audit_rows(0, tier_result.match)
        ),
    )
    _write_traces(out, (tier_result.match for tier_result in report.tier_results.values()))

    record_path = out / "run_record.json"
    _dump_json(
        record_path,
        {
            "kind": "baseline",
            "target": report.target,
            "tier_anchors": TIER_ANCHORS,
            "tiers": {
                tier: {
                    "wins": tier_result.wins,
                    "losses": tier_result.losses,
                    "ties": tier_result.ties,
                    "mean_score": tier_result.mean_score,
                    "match": _match_to_dict(tier_result.match),
                }
                for tier, tier_result in report.tier_results.items()
            },
            "final_elo": report.final_elo,
            "prompt_versions": _prompt_versions(
                tier_result.match for tier_result in report.tier_results.values()
            ),
            "config": config.echo() if config else None,
        },
    )
    return [tiers_csv, summary_csv, audit, record_path]


def emit_agreement_reports(
    report: AgreementReport,
    output_dir: str | Path,
    config: RunConfig | None = None,
    per_question: list[tuple[str, JudgmentToken, JudgmentToken]] | None = None,
) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    label_names = [label.value for label in LABELS]
    confusion_csv = out / "confusion.csv"
    _write_csv(
        confusion_csv,
        ["predicted\\gold"] + label_names,
        (
            [label_names[i]] + list(report.matrix.counts[i])
            for i in range(3)
        ),
    )
    summary_csv = out / "agreement.csv"
    _write_csv(
        summary_csv,
        ["n", "accuracy", "kappa"],
        [[report.matrix.n, f"{report.accuracy:.6f}", f"{report.kappa:.6f}"]],
    )
    record_path = out / "run_record.json"
    _dump_json(
        record_path,
        {
            "kind": "agreement",
            "labels": label_names,
            "matrix": [list(row) for row in report.matrix.counts],
            "n": report.matrix.n,
            "accuracy": report.accuracy,
            "kappa": report.kappa,
            "per_question": [
                {"question_id": qid, "pred": pred.value, "gold": gold.value}
                for qid, pred, gold in per_question
            ]
            if per_question
            else None,
            "config": config.echo() if config else None,
        },
    )
    return [confusion_csv, summary_csv, record_path]


def emit_reports(
    result: TournamentResult | BaselineReport | AgreementReport,
    output_dir: str | Path,
    config: RunConfig | None = None,
) -> list[Path]:
    """Write the report set appropriate to the result type; returns paths."""
    if isinstance(result, TournamentResult):
        return emit_tournament_reports(result, output_dir, config)
    if isinstance(result, BaselineReport):
        return emit_baseline_reports(result, output_dir, config)
    if isinstance(result, AgreementReport):
        return emit_agreement_reports(result, output_dir, config)
    raise DataError(f"no report emitter for {type(result).__name__}")


def emit_label_records(
    rows: list[dict], output_dir: str | Path, config: RunConfig | None = None
) -> list[Path]:
    """Write converted {A, B, Tie} label records plus their run record."""
    if not rows:
        raise DataError("refusing to emit an empty label file")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels_path = out / "labels.jsonl"
    with open(labels_path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    record_path = out / "run_record.json"
    _dump_json(
        record_path,
        {"kind": "labels", "records": rows, "config": config.echo() if config else None},
    )
    return [labels_path, record_path]
