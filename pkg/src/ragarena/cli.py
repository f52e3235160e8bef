"""Operator surface: subcommands wiring run configs to the engine.

Exit codes: 0 success, 1 runtime failure (with a categorized diagnostic
on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ragarena import __version__
from ragarena.agreement import agreement_report, ragas_aggregate, scores_to_label
from ragarena.errors import ArenaError, ConfigError, DataError
from ragarena.judge.backends import JudgeBackend, backend_from_config
from ragarena.judge.evaluate import EvaluateOptions, evaluate_pair
from ragarena.judge.types import QAPair, SystemAnswer, group_answers
from ragarena.ranking import Mode, UpsetRule, baseline_evaluate, run_tournament
from ragarena.scoring import JudgmentToken
from ragarena.simulate import DEFAULT_FIDELITY_ROUNDS, run_fidelity
from ragarena.store import (
    RunConfig,
    VerdictCache,
    emit_agreement_reports,
    emit_baseline_reports,
    emit_label_records,
    emit_tournament_reports,
    ingest_answers,
    ingest_dataset,
    ingest_dimension_scores,
    ingest_labels,
)


def _add_common_flags(parser: argparse.ArgumentParser, *, config_required: bool) -> None:
    parser.add_argument("--config", type=str, required=config_required, help="run config JSON")
    parser.add_argument("--rounds", type=int, help="Swiss round count override")
    parser.add_argument("--k", type=float, dest="k_factor", help="Elo K-factor override")
    parser.add_argument("--threshold", type=float, help="confidence threshold override")
    parser.add_argument("--delta", type=float, help="scalar-score tie threshold override")
    parser.add_argument("--seed", type=int, help="run seed override")
    parser.add_argument(
        "--position-swap", action="store_true", default=None,
        help="judge both presentation orders and average",
    )
    parser.add_argument(
        "--upset", action="store_true", default=None,
        help="enable K-factor amplification for upset wins",
    )
    parser.add_argument("--beta", type=float, help="upset amplification strength")
    parser.add_argument("--mode", choices=["swiss", "roundrobin"], help="tournament mode override")
    parser.add_argument("--out", type=str, help="output directory override")
    parser.add_argument("--cache-dir", type=str, help="verdict cache directory override")
    parser.add_argument("--workers", type=int, help="concurrent matches per round")


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "rounds": args.rounds,
        "k_factor": args.k_factor,
        "threshold": args.threshold,
        "delta": args.delta,
        "seed": args.seed,
        "position_swap": args.position_swap,
        "upset_enabled": args.upset,
        "upset_beta": args.beta,
        "mode": args.mode,
        "output_dir": args.out,
        "cache_dir": args.cache_dir,
        "max_workers": args.workers,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    return config


def _judge_options(config: RunConfig) -> EvaluateOptions:
    cache = VerdictCache(config.cache_dir) if config.cache_dir else None
    return EvaluateOptions(
        threshold=config.threshold, position_swap=config.position_swap, cache=cache
    )


def _load_answer_sets(config: RunConfig) -> dict[str, dict[str, SystemAnswer]]:
    by_system: dict[str, dict[str, SystemAnswer]] = {}
    for system_id, path in config.answers_paths.items():
        records = [a for a in ingest_answers(path) if a.system_id == system_id]
        if not records:
            raise DataError(f"{path}: no answers for system {system_id!r}")
        by_system[system_id] = group_answers(records)[system_id]
    return by_system


def _run_tournament_command(args: argparse.Namespace, mode: Mode | None) -> int:
    config = _load_config(args)
    config.require_paths("dataset_path", "answers_paths")
    if mode is not None:
        config.mode = mode.value
    dataset = ingest_dataset(config.dataset_path)
    answers = _load_answer_sets(config)
    backend = backend_from_config(config.backend, base_seed=config.seed)
    result = run_tournament(
        list(config.answers_paths),
        answers,
        dataset,
        backend,
        rounds=config.rounds,
        mode=Mode(config.mode),
        k_factor=config.k_factor,
        upset=UpsetRule(enabled=config.upset_enabled, beta=config.upset_beta),
        options=_judge_options(config),
        max_workers=config.max_workers,
    )
    paths = emit_tournament_reports(result, config.output_dir, config)
    print(f"{result.mode.value}: {result.total_matches} matches over {len(result.rounds)} round(s)")
    for rank, sid in enumerate(result.final_order, start=1):
        print(f"{rank:3d}. {sid}  {result.final_ratings[sid]:.1f}")
    _print_outputs(paths)
    return 0


def cmd_tournament(args: argparse.Namespace) -> int:
    return _run_tournament_command(args, None)


def cmd_roundrobin(args: argparse.Namespace) -> int:
    return _run_tournament_command(args, Mode.ROUND_ROBIN)


def cmd_baseline(args: argparse.Namespace) -> int:
    config = _load_config(args)
    config.require_paths("dataset_path", "baseline_paths")
    roles = {"target", "high", "medium", "low"}
    if set(config.baseline_paths) != roles:
        raise ConfigError(f"baseline config must map exactly {sorted(roles)} to answer files")
    dataset = ingest_dataset(config.dataset_path)

    def answer_map(path: str) -> dict[str, SystemAnswer]:
        grouped = group_answers(ingest_answers(path))
        if len(grouped) != 1:
            raise DataError(f"{path}: baseline answer files must hold exactly one system")
        return next(iter(grouped.values()))

    backend = backend_from_config(config.backend, base_seed=config.seed)
    report = baseline_evaluate(
        answer_map(config.baseline_paths["target"]),
        {tier: answer_map(config.baseline_paths[tier]) for tier in ("high", "medium", "low")},
        dataset,
        backend,
        k_factor=config.k_factor,
        options=_judge_options(config),
    )
    paths = emit_baseline_reports(report, config.output_dir, config)
    print(f"target {report.target}: final elo {report.final_elo:.1f}")
    for tier in ("high", "medium", "low"):
        tier_result = report.tier_results[tier]
        print(
            f"  vs {tier}: {tier_result.wins}W/{tier_result.losses}L/{tier_result.ties}T "
            f"mean {tier_result.mean_score:.3f}"
        )
    _print_outputs(paths)
    return 0


def _judged_predictions(
    config: RunConfig, dataset: list[QAPair], backend: JudgeBackend
) -> dict[str, JudgmentToken]:
    if config.pair:
        first_id, second_id = config.pair
    elif len(config.answers_paths) == 2:
        first_id, second_id = sorted(config.answers_paths)
    else:
        raise ConfigError("validate needs 'pair' (or exactly two answer sets) to judge")
    answers = _load_answer_sets(config)
    for sid in (first_id, second_id):
        if sid not in answers:
            raise ConfigError(f"no answers configured for system {sid!r}")
    options = _judge_options(config)
    return {
        qa.id: evaluate_pair(backend, qa, answers[first_id][qa.id], answers[second_id][qa.id], options).decision
        for qa in dataset
    }


def cmd_validate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.gold:
        config.gold_labels_path = args.gold
    if args.pred:
        config.pred_labels_path = args.pred
    config.require_paths("gold_labels_path")
    gold = ingest_labels(config.gold_labels_path)

    if config.pred_labels_path:
        config.require_paths("pred_labels_path")
        pred = ingest_labels(config.pred_labels_path)
    else:
        config.require_paths("dataset_path", "answers_paths")
        dataset = ingest_dataset(config.dataset_path)
        backend = backend_from_config(config.backend, base_seed=config.seed)
        pred = _judged_predictions(config, dataset, backend)

    missing = sorted(set(gold) - set(pred))
    extra = sorted(set(pred) - set(gold))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"predictions missing for: {', '.join(missing)}")
        if extra:
            parts.append(f"predictions without gold labels: {', '.join(extra)}")
        raise DataError("; ".join(parts))

    question_ids = sorted(gold)
    report = agreement_report([pred[q] for q in question_ids], [gold[q] for q in question_ids])
    paths = emit_agreement_reports(
        report,
        config.output_dir,
        config,
        per_question=[(q, pred[q], gold[q]) for q in question_ids],
    )
    print(f"n={report.matrix.n} accuracy={report.accuracy:.4f} kappa={report.kappa:.4f}")
    _print_outputs(paths)
    return 0


def cmd_convert_ragas(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.scores:
        config.dimension_scores_path = args.scores
    config.require_paths("dimension_scores_path")
    system_a = args.system_a or (config.pair[0] if config.pair else None)
    system_b = args.system_b or (config.pair[1] if config.pair else None)
    if not system_a or not system_b:
        raise ConfigError("convert-ragas needs --system-a and --system-b (or 'pair' in config)")

    records = ingest_dimension_scores(config.dimension_scores_path)
    by_system: dict[str, dict[str, float]] = {}
    for record in records:
        by_system.setdefault(record.system_id, {})[record.question_id] = ragas_aggregate(
            record.scores
        )
    for sid in (system_a, system_b):
        if sid not in by_system:
            raise DataError(f"no dimension scores for system {sid!r}")
    scores_a, scores_b = by_system[system_a], by_system[system_b]
    missing = sorted(set(scores_a).symmetric_difference(scores_b))
    if missing:
        raise DataError(f"questions scored for only one system: {', '.join(missing)}")

    rows = []
    for qid in sorted(scores_a):
        label = scores_to_label(scores_a[qid], scores_b[qid], config.delta)
        rows.append(
            {
                "question_id": qid,
                "label": label.value,
                "score_a": scores_a[qid],
                "score_b": scores_b[qid],
            }
        )
    paths = emit_label_records(rows, config.output_dir, config)
    print(f"converted {len(rows)} question scores to labels ({system_a} vs {system_b})")
    _print_outputs(paths)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    report = run_fidelity(
        n_systems=args.systems,
        n_questions=args.questions,
        rounds=DEFAULT_FIDELITY_ROUNDS if args.rounds is None else args.rounds,
        noise=args.noise,
        seeds=range(config.seed, config.seed + args.seeds),
        replicates=args.replicates,
        base_seed=config.seed,
        stratified=not args.iid_questions,
    )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = {
        "kind": "simulation",
        "planted": list(report.planted),
        "noise": report.noise,
        "n_questions": report.n_questions,
        "rounds": report.rounds,
        "stratified": report.stratified,
        "runs": [
            {
                "seed": run.seed,
                "swiss_tau": run.swiss_tau,
                "roundrobin_tau": run.roundrobin_tau,
                "swiss_order": list(run.swiss_order),
                "roundrobin_order": list(run.roundrobin_order),
            }
            for run in report.runs
        ],
        "swiss_tau_mean": report.swiss_tau_mean,
        "roundrobin_tau_mean": report.roundrobin_tau_mean,
        "variance": [
            {
                "source": summary.source,
                "taus": list(summary.taus),
                "tau_mean": summary.tau_mean,
                "tau_std": summary.tau_std,
                "elo_std_mean": summary.elo_std_mean,
            }
            for summary in report.variance
        ],
        "config": config.echo(),
    }
    record_path = out / "run_record.json"
    record_path.write_text(
        json.dumps(record, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    print(
        f"swiss tau mean {report.swiss_tau_mean:.4f}, "
        f"roundrobin tau mean {report.roundrobin_tau_mean:.4f} "
        f"over {len(report.runs)} seed(s)"
    )
    for summary in report.variance:
        print(
            f"  variance[{summary.source}]: tau std {summary.tau_std:.4f}, "
            f"elo std mean {summary.elo_std_mean:.3f}"
        )
    _print_outputs([record_path])
    return 0


def _print_outputs(paths: list[Path]) -> None:
    for path in paths:
        print(f"wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ragarena",
        description="Pairwise judging, Elo tournaments, and agreement metrics for RAG systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, handler, helptext in (
        ("tournament", cmd_tournament, "run a Swiss (or round-robin) tournament"),
        ("roundrobin", cmd_roundrobin, "run an exhaustive round-robin tournament"),
        ("baseline", cmd_baseline, "position one system against tier answer sets"),
    ):
        sub = subparsers.add_parser(name, help=helptext)
        _add_common_flags(sub, config_required=True)
        sub.set_defaults(handler=handler)

    validate = subparsers.add_parser("validate", help="score predictions against gold labels")
    _add_common_flags(validate, config_required=False)
    validate.add_argument("--pred", type=str, help="predicted-label JSONL file")
    validate.add_argument("--gold", type=str, help="gold-label JSONL file")
    validate.set_defaults(handler=cmd_validate)

    convert = subparsers.add_parser(
        "convert-ragas", help="turn dimension scores into {A, B, Tie} labels"
    )
    _add_common_flags(convert, config_required=False)
    convert.add_argument("--scores", type=str, help="dimension-score JSONL file")
    convert.add_argument("--system-a", type=str, help="system treated as side A")
    convert.add_argument("--system-b", type=str, help="system treated as side B")
    convert.set_defaults(handler=cmd_convert_ragas)

    simulate = subparsers.add_parser("simulate", help="planted-order fidelity experiment")
    _add_common_flags(simulate, config_required=False)
    simulate.add_argument("--systems", type=int, default=8, help="planted system count")
    simulate.add_argument(
        "--questions", type=int, default=24, help="synthetic question count (>= 3x systems)"
    )
    simulate.add_argument("--noise", type=float, default=0.0, help="oracle decision noise")
    simulate.add_argument("--seeds", type=int, default=10, help="number of seeds to run")
    simulate.add_argument(
        "--replicates", type=int, default=0, help="replicates per variance source"
    )
    simulate.add_argument(
        "--iid-questions", action="store_true",
        help="draw question difficulties i.i.d. instead of the stratified grid",
    )
    simulate.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ArenaError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
