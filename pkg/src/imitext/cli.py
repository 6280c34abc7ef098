"""Command-line surface: generate, evaluate, judge, pair, report, agreement.

Every file-producing run writes a RunManifest (``<output>.manifest.json``)
recording the command, configuration, input/output paths, cassette, template
fingerprint, and call statistics, so artifacts can be reproduced by re-running
from the manifest in replay mode.

Exit codes: 0 success, 1 validation error, 2 backend/replay or step failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import pipeline
from .adapter import KnowledgeStore
from .backends import (
    Backend,
    BackendError,
    CASSETTE_MODES,
    PROFILES,
    make_backend,
)
from .core import (
    ConfigError,
    ImitextError,
    PipelineConfig,
    Strategy,
    TaskInstance,
    ValidationError,
    load_tasks,
    read_jsonl,
    write_jsonl,
)
from .datasets import (
    CATEGORY_RULES,
    PAIRING_MODES,
    PairingPolicy,
    load_corpus,
    pair_topics,
)
from .metrics import (
    SampleScores,
    adaptive_imitativeness,
    agreement,
    basic_scores,
    build_report,
    halluc,
    judge,
    nli_metrics,
    write_report_csv,
    write_report_json,
)
from .pipeline import StepFailure
from .segmentation import content_tokens, load_abbreviations
from .templates_io import TemplateSet

logger = logging.getLogger(__name__)

STRATEGY_CHOICES = tuple(s.value for s in Strategy)
ABLATION_CHOICES = (
    "no_clarify_stm",
    "no_outline",
    "no_refusal",
    "no_revise_ltm",
    "no_segment",
)

# config-file defaults for `generate`; flags override file values, file
# values override these
GENERATE_DEFAULTS: dict[str, Any] = {
    "strategy": "repa",
    "ablations": [],
    "theta": 0.6,
    "stm_window": 2,
    "sr_iterations": 4,
    "retrieval_enabled": True,
    "case_sensitive_topics": False,
    "backend_profile": "mock",
    "store": None,
    "templates": None,
    "abbreviations": None,
    "cassette": None,
    "cassette_mode": None,
    "backend_url": None,
    "nli_fixture": None,
    "nli_strict": False,
    "jobs": 1,
    "trace": True,
}


# ---------------------------------------------------------------------------
# shared plumbing

def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _add_backend_args(parser: argparse.ArgumentParser, default_profile: str) -> None:
    group = parser.add_argument_group("backend")
    group.add_argument(
        "--backend-profile", choices=PROFILES, default=None,
        help=f"model access profile (default: {default_profile})",
    )
    group.add_argument("--backend-url", default=None,
                       help="base URL for the http profile")
    group.add_argument("--cassette", default=None,
                       help="JSONL cassette file for record/replay")
    group.add_argument(
        "--cassette-mode", choices=CASSETTE_MODES, default=None,
        help="cassette mode (default: replay when --cassette is set)",
    )
    group.add_argument("--nli-fixture", default=None,
                       help="JSONL fixture backing the offline NLI classifier")
    group.add_argument("--nli-strict", action="store_true", default=None,
                       help="fail instead of defaulting to 'neutral' on unknown NLI pairs")


def _build_backend(settings: Mapping[str, Any], default_profile: str) -> Backend:
    return make_backend(
        settings.get("backend_profile") or default_profile,
        cassette_path=settings.get("cassette"),
        cassette_mode=settings.get("cassette_mode"),
        nli_fixture=settings.get("nli_fixture"),
        nli_strict=bool(settings.get("nli_strict")),
        base_url=settings.get("backend_url"),
    )


def _backend_settings(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "backend_profile": args.backend_profile,
        "backend_url": args.backend_url,
        "cassette": args.cassette,
        "cassette_mode": args.cassette_mode,
        "nli_fixture": args.nli_fixture,
        "nli_strict": args.nli_strict,
    }


def _write_manifest(
    output_path: str,
    *,
    command: str,
    argv: Sequence[str],
    config: Mapping[str, Any],
    inputs: Mapping[str, Any],
    outputs: Mapping[str, Any],
    settings: Mapping[str, Any],
    backend: Backend | None = None,
    templates: TemplateSet | None = None,
    config_path: str | None = None,
    extra: Mapping[str, Any] | None = None,
) -> str:
    manifest: dict[str, Any] = {
        "command": command,
        "argv": list(argv),
        "config": dict(config),
        "config_path": config_path,
        "inputs": dict(inputs),
        "outputs": dict(outputs),
        "cassette": (
            {"path": settings.get("cassette"), "mode": settings.get("cassette_mode") or "replay"}
            if settings.get("cassette") else None
        ),
        "backend_profile": backend.profile_name if backend else None,
        "timestamp": _utc_now(),
        "templates_fingerprint": templates.fingerprint() if templates else None,
        "call_stats": backend.call_stats().to_dict() if backend else None,
    }
    if extra:
        manifest.update(extra)
    path = f"{output_path}.manifest.json"
    Path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    logger.info("wrote manifest %s", path)
    return path


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - set(GENERATE_DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
    return data


def _explicit_flags(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values the user actually supplied (None-defaults mean 'unset')."""
    explicit: dict[str, Any] = {}
    direct = (
        "strategy", "theta", "stm_window", "sr_iterations", "backend_profile",
        "store", "templates", "abbreviations", "cassette", "cassette_mode",
        "backend_url", "nli_fixture", "nli_strict", "jobs",
    )
    for name in direct:
        value = getattr(args, name, None)
        if value is not None:
            explicit[name] = value
    if args.ablate:
        explicit["ablations"] = list(args.ablate)
    if args.no_retrieval:
        explicit["retrieval_enabled"] = False
    if args.case_sensitive_topics:
        explicit["case_sensitive_topics"] = True
    if args.no_trace:
        explicit["trace"] = False
    return explicit


def _tasks_by_id(tasks: Sequence[TaskInstance]) -> dict[str, TaskInstance]:
    return {task.id: task for task in tasks}


def _join_results_to_tasks(
    results: Sequence[pipeline.GenerationResult],
    tasks: Mapping[str, TaskInstance],
    results_path: str,
) -> list[tuple[pipeline.GenerationResult, TaskInstance]]:
    joined = []
    for result in results:
        task = tasks.get(result.instance_id)
        if task is None:
            raise ValidationError(
                f"{results_path}: result {result.instance_id!r} has no matching task"
            )
        joined.append((result, task))
    return joined


# ---------------------------------------------------------------------------
# generate

def _cmd_generate(args: argparse.Namespace) -> int:
    file_settings = _load_config_file(args.config)
    settings = {**GENERATE_DEFAULTS, **file_settings, **_explicit_flags(args)}

    try:
        config = PipelineConfig(
            theta=settings["theta"],
            stm_window=settings["stm_window"],
            strategy=settings["strategy"],
            retrieval_enabled=settings["retrieval_enabled"],
            sr_iterations=settings["sr_iterations"],
            ablations=frozenset(settings["ablations"]),
            backend_profile=settings["backend_profile"],
            case_sensitive_topics=settings["case_sensitive_topics"],
        )
    except ValueError as exc:  # bad enum name from a config file
        raise ConfigError(str(exc)) from exc
    jobs = settings["jobs"]
    if not isinstance(jobs, int) or jobs < 1:
        raise ValidationError(f"--jobs must be a positive integer, got {jobs!r}")

    needs_store = (
        config.strategy is not Strategy.DEFAULT and config.retrieval_enabled
    )
    if needs_store and not settings["store"]:
        raise ValidationError(
            f"strategy {config.strategy.value!r} retrieves from a knowledge "
            "store: pass --store, or disable retrieval with --no-retrieval"
        )

    tasks = load_tasks(args.tasks)
    store = KnowledgeStore.from_jsonl(settings["store"]) if settings["store"] else None
    templates = TemplateSet.load(settings["templates"])
    abbreviations = (
        load_abbreviations(settings["abbreviations"])
        if settings["abbreviations"] else None
    )
    backend = _build_backend(settings, default_profile="mock")

    def run_one(task: TaskInstance) -> pipeline.GenerationResult | StepFailure:
        try:
            return pipeline.run(task, config, backend, templates, store, abbreviations)
        except StepFailure as failure:
            return failure

    rows: list[pipeline.GenerationResult | StepFailure] = []
    if jobs == 1:
        for task in tasks:
            row = run_one(task)
            rows.append(row)
            if isinstance(row, StepFailure):
                break
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            all_rows = list(pool.map(run_one, tasks))
        for row in all_rows:
            rows.append(row)
            if isinstance(row, StepFailure):
                break

    pipeline.write_results(args.out, rows, include_trace=settings["trace"])
    output_tokens = sum(
        len(r.output_text.split())
        for r in rows if isinstance(r, pipeline.GenerationResult)
    )
    _write_manifest(
        args.out,
        command="generate",
        argv=args.raw_argv,
        config=config.to_dict(),
        inputs={
            "tasks": args.tasks,
            "store": settings["store"],
            "templates": settings["templates"] or "packaged",
            "abbreviations": settings["abbreviations"] or "packaged",
        },
        outputs={"results": args.out},
        settings=settings,
        backend=backend,
        templates=templates,
        config_path=args.config,
        extra={
            "instances": len(rows),
            "output_tokens": output_tokens,
            "trace": settings["trace"],
            "jobs": jobs,
        },
    )

    failure = next((r for r in rows if isinstance(r, StepFailure)), None)
    if failure is not None:
        print(
            f"error: instance {failure.instance_id!r} failed at step "
            f"{failure.step}: {failure.cause}",
            file=sys.stderr,
        )
        return 2
    logger.info("generated %d results -> %s", len(rows), args.out)
    return 0


# ---------------------------------------------------------------------------
# evaluate

def _load_ratings(path: str) -> dict[str, dict[str, float]]:
    ratings: dict[str, dict[str, float]] = {}
    for lineno, row in read_jsonl(path):
        instance_id = row.get("instance_id")
        if not isinstance(instance_id, str) or not instance_id:
            raise ValidationError(f"{path}:{lineno}: rating row needs 'instance_id'")
        if instance_id in ratings:
            raise ValidationError(f"{path}:{lineno}: duplicate rating for {instance_id!r}")
        ratings[instance_id] = {
            key: float(row[key])
            for key in ("imitativeness", "adaptiveness", "adaptive_imitativeness")
            if key in row and row[key] is not None
        }
    return ratings


def _cmd_evaluate(args: argparse.Namespace) -> int:
    tasks = _tasks_by_id(load_tasks(args.tasks))
    results = pipeline.read_results(args.results)
    joined = _join_results_to_tasks(results, tasks, args.results)
    ratings = _load_ratings(args.ratings) if args.ratings else {}
    settings = _backend_settings(args)
    backend = _build_backend(settings, default_profile="offline")

    samples = []
    for result, task in joined:
        if task.gold_text is None:
            raise ValidationError(
                f"task {task.id!r} has no gold_text; evaluation needs gold references"
            )
        try:
            basic = basic_scores(result.output_text, task.gold_text)
            halluc_pct = halluc(result.output_text, task.source_text, task.gold_text)
            nli_e, nli_c, nli_n = nli_metrics(result.output_text, task.gold_text, backend)
            ratio = (
                len(content_tokens(result.output_text))
                / len(content_tokens(task.gold_text))
            )
        except ImitextError as exc:
            raise ValidationError(f"instance {task.id!r}: {exc}") from exc
        judge_row = ratings.get(result.instance_id, {})
        samples.append(
            SampleScores(
                instance_id=result.instance_id,
                r1=basic.r1, r2=basic.r2, rl=basic.rl, rlsum=basic.rlsum,
                meteor=basic.meteor, bleu=basic.bleu,
                halluc=halluc_pct, nli_e=nli_e, nli_c=nli_c, nli_neutral=nli_n,
                imitativeness=judge_row.get("imitativeness"),
                adaptiveness=judge_row.get("adaptiveness"),
                adaptive_imitativeness=judge_row.get("adaptive_imitativeness"),
                length_ratio=ratio,
            )
        )

    report = build_report(
        samples,
        config_echo={
            "tasks": args.tasks,
            "results": args.results,
            "ratings": args.ratings,
            "backend_profile": backend.profile_name,
            "nli_fixture": args.nli_fixture,
        },
    )
    write_report_json(report, args.out)
    _write_manifest(
        args.out,
        command="evaluate",
        argv=args.raw_argv,
        config={},
        inputs={"tasks": args.tasks, "results": args.results, "ratings": args.ratings},
        outputs={"report": args.out},
        settings=settings,
        backend=backend,
        extra={"instances": len(samples)},
    )
    logger.info("evaluated %d instances -> %s", len(samples), args.out)
    return 0


# ---------------------------------------------------------------------------
# judge

def _cmd_judge(args: argparse.Namespace) -> int:
    tasks = _tasks_by_id(load_tasks(args.tasks))
    results = pipeline.read_results(args.results)
    joined = _join_results_to_tasks(results, tasks, args.results)
    templates = TemplateSet.load(args.templates)
    settings = _backend_settings(args)
    backend = _build_backend(settings, default_profile="mock")

    rows = []
    for result, task in joined:
        imitativeness = judge(
            result.output_text, task.source_text, None,
            "imitativeness", backend, templates,
        )
        adaptiveness = judge(
            result.output_text, task.source_text, task.gold_text,
            "adaptiveness", backend, templates,
        )
        rows.append(
            {
                "instance_id": result.instance_id,
                "imitativeness": imitativeness,
                "adaptiveness": adaptiveness,
                "adaptive_imitativeness": adaptive_imitativeness(
                    imitativeness, adaptiveness
                ),
            }
        )

    write_jsonl(args.out, rows)
    _write_manifest(
        args.out,
        command="judge",
        argv=args.raw_argv,
        config={},
        inputs={"tasks": args.tasks, "results": args.results},
        outputs={"ratings": args.out},
        settings=settings,
        backend=backend,
        templates=templates,
        extra={"instances": len(rows)},
    )
    logger.info("judged %d instances -> %s", len(rows), args.out)
    return 0


# ---------------------------------------------------------------------------
# pair

def _cmd_pair(args: argparse.Namespace) -> int:
    records = load_corpus(args.corpus)
    policy = PairingPolicy(
        mode=args.mode,
        min_similarity=args.min_similarity,
        top_k=args.top_k,
        min_sentences=args.min_sentences,
        min_words=args.min_words,
        category_overlap_min=args.category_overlap_min,
    )
    settings = _backend_settings(args)
    backend = _build_backend(settings, default_profile="offline")
    tasks, stats = pair_topics(
        records,
        policy,
        backend,
        disjoint=not args.no_disjoint,
        both_directions=args.both_directions,
        category_rule=args.category_rule,
    )
    write_jsonl(args.out, (task.to_record() for task in tasks))
    stats_path = args.stats or f"{args.out}.stats.json"
    Path(stats_path).write_text(
        json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(
        args.out,
        command="pair",
        argv=args.raw_argv,
        config=policy.to_dict(),
        inputs={"corpus": args.corpus},
        outputs={"tasks": args.out, "stats": stats_path},
        settings=settings,
        backend=backend,
        extra={"pairs": stats["pairs"], "tasks": stats["tasks"]},
    )
    logger.info("paired %d tasks -> %s", len(tasks), args.out)
    return 0


# ---------------------------------------------------------------------------
# report

def _label_for(path: str, index: int, labels: Sequence[str] | None) -> str:
    if labels:
        return labels[index]
    return Path(path).stem


def _cmd_report(args: argparse.Namespace) -> int:
    if not args.metrics and not args.manifests:
        raise ValidationError("report needs --metrics and/or --manifests")
    if args.metrics and not args.out:
        raise ValidationError("--metrics needs --out for the merged table")
    if args.manifests and not args.cost_out:
        raise ValidationError("--manifests needs --cost-out for the cost table")
    if args.labels and args.metrics and len(args.labels) != len(args.metrics):
        raise ValidationError("--labels must match --metrics in count")

    written: dict[str, str] = {}
    if args.metrics:
        rows = []
        for index, path in enumerate(args.metrics):
            try:
                report = json.loads(Path(path).read_text("utf-8"))
            except FileNotFoundError as exc:
                raise ValidationError(f"metric report not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
            aggregate = report.get("aggregate")
            if not isinstance(aggregate, dict):
                raise ValidationError(f"{path}: not a metric report (no 'aggregate')")
            rows.append({"label": _label_for(path, index, args.labels), **aggregate})
        write_report_csv(rows, args.out)
        written["table"] = args.out

    if args.manifests:
        import csv as _csv

        rate_per_token = args.rate / 1_000_000.0
        cost_rows = []
        for index, path in enumerate(args.manifests):
            try:
                manifest = json.loads(Path(path).read_text("utf-8"))
            except FileNotFoundError as exc:
                raise ValidationError(f"manifest not found: {path}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
            stats = manifest.get("call_stats") or {}
            totals = stats.get("totals") or {}
            calls = totals.get("calls", 0)
            completion = totals.get("completion_tokens", 0)
            instances = manifest.get("instances") or 0
            output_tokens = manifest.get("output_tokens") or 0
            cost = completion * rate_per_token
            cost_rows.append(
                {
                    "label": _label_for(path, index, None),
                    "calls": calls,
                    "mean_api_calls": calls / instances if instances else "",
                    "prompt_tokens": totals.get("prompt_tokens", 0),
                    "completion_tokens": completion,
                    "cost": cost,
                    "cost_per_output_token": (
                        cost / output_tokens if output_tokens else ""
                    ),
                }
            )
        with open(args.cost_out, "w", encoding="utf-8", newline="") as handle:
            writer = _csv.DictWriter(
                handle,
                fieldnames=[
                    "label", "calls", "mean_api_calls", "prompt_tokens",
                    "completion_tokens", "cost", "cost_per_output_token",
                ],
            )
            writer.writeheader()
            writer.writerows(cost_rows)
        written["cost_table"] = args.cost_out

    anchor = args.out or args.cost_out
    _write_manifest(
        anchor,
        command="report",
        argv=args.raw_argv,
        config={"rate_per_million_completion_tokens": args.rate},
        inputs={"metrics": list(args.metrics or ()), "manifests": list(args.manifests or ())},
        outputs=written,
        settings={},
    )
    logger.info("report written: %s", ", ".join(written.values()))
    return 0


# ---------------------------------------------------------------------------
# agreement

def _cmd_agreement(args: argparse.Namespace) -> int:
    table: dict[tuple[str, str, str], float] = {}
    for lineno, row in read_jsonl(args.ratings):
        try:
            key = (str(row["judge"]), str(row["sample"]), str(row["model"]))
            rating = float(row["rating"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(
                f"{args.ratings}:{lineno}: rating rows need judge/sample/model/rating"
            ) from exc
        if key in table:
            raise ValidationError(
                f"{args.ratings}:{lineno}: duplicate rating for {key}"
            )
        table[key] = rating

    judges = sorted({k[0] for k in table})
    sample_ids = sorted({k[1] for k in table})
    models = sorted({k[2] for k in table})
    try:
        scores = [
            [[table[(j, s, m)] for m in models] for s in sample_ids]
            for j in judges
        ]
    except KeyError as exc:
        raise ValidationError(
            f"{args.ratings}: missing rating for judge/sample/model {exc.args[0]}"
        ) from exc

    with_ties = agreement(scores, include_ties=True)
    try:
        without_ties: float | None = agreement(scores, include_ties=False)
    except ValueError:
        without_ties = None

    summary = {
        "with_ties": with_ties,
        "without_ties": without_ties,
        "judges": len(judges),
        "samples": len(sample_ids),
        "models": len(models),
    }
    Path(args.out).write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(
        args.out,
        command="agreement",
        argv=args.raw_argv,
        config={},
        inputs={"ratings": args.ratings},
        outputs={"agreement": args.out},
        settings={},
    )
    print(json.dumps(summary, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imitext",
        description=(
            "Topic-adaptive article rewriting: generate with a recurrent "
            "plan-then-adapt pipeline or baseline strategies, evaluate with "
            "reference and factuality metrics, judge with model ratings, "
            "pair corpora into tasks, and tabulate reports."
        ),
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="-v for info logs, -vv for debug",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser(
        "generate", help="run a generation strategy over a task file"
    )
    generate.add_argument("--tasks", required=True, help="input tasks JSONL")
    generate.add_argument("--out", required=True, help="output results JSONL")
    generate.add_argument("--strategy", choices=STRATEGY_CHOICES, default=None)
    generate.add_argument(
        "--ablate", action="append", choices=ABLATION_CHOICES, default=None,
        metavar="ABLATION", help="disable one pipeline stage (repeatable)",
    )
    generate.add_argument("--theta", type=float, default=None,
                          help="confidence threshold for keeping answers")
    generate.add_argument("--stm-window", type=int, default=None,
                          help="clarification memory window (segments)")
    generate.add_argument("--sr-iterations", type=int, default=None,
                          help="feedback+refine rounds for self_refine")
    generate.add_argument("--no-retrieval", action="store_const", const=True,
                          default=None, help="disable knowledge retrieval")
    generate.add_argument("--store", default=None, help="knowledge store JSONL")
    generate.add_argument("--templates", default=None,
                          help="directory of prompt templates (default: packaged)")
    generate.add_argument("--abbreviations", default=None,
                          help="abbreviation list file (default: packaged)")
    generate.add_argument("--case-sensitive-topics", action="store_const",
                          const=True, default=None,
                          help="match topic mentions case-sensitively")
    generate.add_argument("--no-trace", action="store_const", const=True,
                          default=None, help="omit step traces from results")
    generate.add_argument("--jobs", type=int, default=None,
                          help="instance-level parallelism (default: 1)")
    generate.add_argument("--config", default=None,
                          help="JSON config file with the same keys as flags (flags win)")
    _add_backend_args(generate, default_profile="mock")
    generate.set_defaults(func=_cmd_generate)

    evaluate = commands.add_parser(
        "evaluate", help="score results against gold references"
    )
    evaluate.add_argument("--tasks", required=True)
    evaluate.add_argument("--results", required=True)
    evaluate.add_argument("--out", required=True, help="output report JSON")
    evaluate.add_argument("--ratings", default=None,
                          help="judge ratings JSONL to merge into the report")
    _add_backend_args(evaluate, default_profile="offline")
    evaluate.set_defaults(func=_cmd_evaluate)

    judge_cmd = commands.add_parser(
        "judge", help="rate outputs for imitativeness and adaptiveness"
    )
    judge_cmd.add_argument("--tasks", required=True)
    judge_cmd.add_argument("--results", required=True)
    judge_cmd.add_argument("--out", required=True, help="output ratings JSONL")
    judge_cmd.add_argument("--templates", default=None)
    _add_backend_args(judge_cmd, default_profile="mock")
    judge_cmd.set_defaults(func=_cmd_judge)

    pair = commands.add_parser(
        "pair", help="build tasks from similar topic pairs in a corpus"
    )
    pair.add_argument("--corpus", required=True, help="corpus JSONL")
    pair.add_argument("--out", required=True, help="output tasks JSONL")
    pair.add_argument("--mode", choices=PAIRING_MODES, default="threshold")
    pair.add_argument("--min-similarity", type=float, default=0.95)
    pair.add_argument("--top-k", type=int, default=500)
    pair.add_argument("--min-sentences", type=int, default=3)
    pair.add_argument("--min-words", type=int, default=60)
    pair.add_argument("--category-overlap-min", type=float, default=0.3)
    pair.add_argument("--category-rule", choices=CATEGORY_RULES, default="keep",
                      help="keep related pairs (default) or keep divergent ones")
    pair.add_argument("--both-directions", action="store_true",
                      help="emit both orientations of each pair")
    pair.add_argument("--no-disjoint", action="store_true",
                      help="allow a topic to appear in multiple pairs")
    pair.add_argument("--stats", default=None,
                      help="stats sidecar path (default: <out>.stats.json)")
    _add_backend_args(pair, default_profile="offline")
    pair.set_defaults(func=_cmd_pair)

    report = commands.add_parser(
        "report", help="merge metric reports into tables"
    )
    report.add_argument("--metrics", nargs="+", default=None,
                        help="metric report JSON files to merge")
    report.add_argument("--labels", nargs="+", default=None,
                        help="row labels for --metrics (default: file stems)")
    report.add_argument("--out", default=None, help="merged metrics CSV")
    report.add_argument("--manifests", nargs="+", default=None,
                        help="run manifests for the cost table")
    report.add_argument("--rate", type=float, default=15.0,
                        help="dollars per 1M completion tokens (default: 15)")
    report.add_argument("--cost-out", default=None, help="cost table CSV")
    report.set_defaults(func=_cmd_report)

    agreement_cmd = commands.add_parser(
        "agreement", help="inter-judge agreement from rating rows"
    )
    agreement_cmd.add_argument(
        "--ratings", required=True,
        help="JSONL rows {judge, sample, model, rating}",
    )
    agreement_cmd.add_argument("--out", required=True, help="output summary JSON")
    agreement_cmd.set_defaults(func=_cmd_agreement)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    raw_argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(raw_argv)
    args.raw_argv = raw_argv
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StepFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except ImitextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
