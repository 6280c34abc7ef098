"""Whole-instance orchestration: the recurrent plan-then-adapt loop and the
baseline strategies, with per-step traces and deterministic serialization.

Step t takes the t-th source segment: clarify it against the short-term
memory, outline topic-anchored questions, retrieve, answer with refusal,
write (draft, then revise against the long-term memory), and fold the new
segment into the long-term memory.  Trace snapshots record the memory state
*entering* the step.  The output text is the in-order concatenation of the
generated segments joined by single spaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .adapter import (
    Adapter,
    AdaptedFact,
    KnowledgeSnippet,
    KnowledgeStore,
    LongTermMemory,
)
from .backends import Backend, BackendRequest, Capability, ComponentTag
from .core import (
    Ablation,
    EmptySourceText,
    GenerationResult,
    ImitextError,
    PipelineConfig,
    Strategy,
    TaskInstance,
    ValidationError,
    read_jsonl,
    write_jsonl,
)
from .planner import Planner, Question, ShortTermMemory, substitute_topic
from .segmentation import Segment, split_sentences
from .templates_io import TemplateSet

logger = logging.getLogger(__name__)

SEGMENT_JOINER = " "


@dataclass(frozen=True)
class StepTrace:
    """Everything that happened in one recurrence step.

    ``stm_snapshot`` and ``ltm_snapshot`` reflect the memory state entering
    the step, before this step's clarification and summary update.
    """

    step: int
    input_segment: str
    clarified: str
    questions: tuple[Question, ...]
    snippets: tuple[KnowledgeSnippet, ...]
    facts: tuple[AdaptedFact, ...]
    output: str
    stm_snapshot: tuple[str, ...]
    ltm_snapshot: str
    warnings: tuple[str, ...] = ()


class StepFailure(ImitextError):
    """A step failed; carries the partial trace for persistence."""

    def __init__(
        self,
        instance_id: str,
        step: int,
        cause: BaseException,
        partial_trace: tuple[StepTrace, ...],
        partial_segments: tuple[str, ...],
    ):
        self.instance_id = instance_id
        self.step = step
        self.cause = cause
        self.partial_trace = partial_trace
        self.partial_segments = partial_segments
        super().__init__(
            f"instance {instance_id!r} failed at step {step}: {cause}"
        )


def _input_segments(
    instance: TaskInstance,
    config: PipelineConfig,
    abbreviations: frozenset[str] | None,
) -> list[Segment]:
    if config.ablated(Ablation.NO_SEGMENT):
        text = instance.source_text
        return [Segment(index=0, text=text, char_span=(0, len(text)))]
    return split_sentences(instance.source_text, abbreviations)


def run_repa(
    instance: TaskInstance,
    config: PipelineConfig,
    backend: Backend,
    templates: TemplateSet | None = None,
    store: KnowledgeStore | None = None,
    abbreviations: frozenset[str] | None = None,
) -> GenerationResult:
    """Run the full plan-then-adapt loop over one instance."""
    if not instance.source_text.strip():
        raise EmptySourceText(instance.id)
    templates = templates or TemplateSet.load()
    planner = Planner(backend, templates, config)
    adapter = Adapter(backend, templates, config, store)
    no_outline = config.ablated(Ablation.NO_OUTLINE)
    no_revise = config.ablated(Ablation.NO_REVISE_LTM)

    segments = _input_segments(instance, config, abbreviations)
    stm = ShortTermMemory(capacity=config.stm_window)
    ltm = LongTermMemory()
    outputs: list[str] = []
    trace: list[StepTrace] = []

    with backend.count_scope() as counter:
        for step, segment in enumerate(segments, start=1):
            stm_entering = stm.window
            ltm_entering = ltm.summary
            try:
                clarified, stm = planner.clarify(segment, stm)
                questions = planner.outline(
                    clarified, instance.source_topic, instance.target_topic,
                    origin_segment=segment.index,
                )
                if no_outline:
                    queries: Sequence[Question | str] = [clarified]
                else:
                    queries = questions
                snippets = adapter.retrieve(instance.target_topic, queries)
                facts = [] if no_outline else adapter.calibrated_qa(questions, snippets)
                kept = [f for f in facts if f.kept]
                output = adapter.write(
                    kept,
                    ltm,
                    clarified,
                    instance.target_topic,
                    snippets=snippets if no_outline else (),
                )
                if not no_revise:
                    ltm = adapter.summarize(ltm, output)
            except ImitextError as exc:
                raise StepFailure(
                    instance.id, step, exc, tuple(trace), tuple(outputs)
                ) from exc
            warnings = (*planner.drain_warnings(), *adapter.drain_warnings())
            outputs.append(output)
            trace.append(
                StepTrace(
                    step=step,
                    input_segment=segment.text,
                    clarified=clarified,
                    questions=tuple(questions),
                    snippets=tuple(snippets),
                    facts=tuple(facts),
                    output=output,
                    stm_snapshot=stm_entering,
                    ltm_snapshot=ltm_entering,
                    warnings=warnings,
                )
            )
        call_count = counter.calls

    return GenerationResult(
        instance_id=instance.id,
        output_text=SEGMENT_JOINER.join(outputs),
        segments=tuple(outputs),
        trace=tuple(trace),
        call_count=call_count,
    )


# ---------------------------------------------------------------------------
# baselines

def _baseline_trace(step: int, source: str, output: str,
                    snippets: Sequence[KnowledgeSnippet]) -> StepTrace:
    return StepTrace(
        step=step,
        input_segment=source,
        clarified="",
        questions=(),
        snippets=tuple(snippets),
        facts=(),
        output=output,
        stm_snapshot=(),
        ltm_snapshot="",
    )


def run_baseline(
    instance: TaskInstance,
    config: PipelineConfig,
    backend: Backend,
    templates: TemplateSet | None = None,
    store: KnowledgeStore | None = None,
    abbreviations: frozenset[str] | None = None,
) -> GenerationResult:
    """Run one of the non-recurrent strategies (llm/rom/self_refine/default)."""
    if not instance.source_text.strip():
        raise EmptySourceText(instance.id)
    templates = templates or TemplateSet.load()
    adapter = Adapter(backend, templates, config, store)

    def generate_call(template: str, **fields: str) -> str:
        payload = templates.render(template, **fields)
        return backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.BASELINE, payload)
        ).strip()

    def retrieve_for(query: str) -> list[KnowledgeSnippet]:
        if not config.retrieval_enabled:
            return []
        return adapter.retrieve(instance.target_topic, [query])

    outputs: list[str] = []
    trace: list[StepTrace] = []
    with backend.count_scope() as counter:
        try:
            if config.strategy is Strategy.LLM:
                snippets = retrieve_for(instance.source_text)
                output = generate_call(
                    "baseline_llm",
                    target_topic=instance.target_topic,
                    snippets=_snippet_block(snippets),
                    source_text=instance.source_text,
                )
                outputs.append(output)
                trace.append(_baseline_trace(1, instance.source_text, output, snippets))

            elif config.strategy is Strategy.DEFAULT:
                output = substitute_topic(
                    instance.source_text,
                    instance.source_topic,
                    instance.target_topic,
                    case_sensitive=config.case_sensitive_topics,
                )
                outputs.append(output)
                trace.append(_baseline_trace(1, instance.source_text, output, ()))

            elif config.strategy is Strategy.ROM:
                segments = _input_segments(instance, config, abbreviations)
                previous = "(none)"
                for step, segment in enumerate(segments, start=1):
                    snippets = retrieve_for(segment.text)
                    output = generate_call(
                        "baseline_rom",
                        target_topic=instance.target_topic,
                        previous=previous,
                        snippets=_snippet_block(snippets),
                        segment=segment.text,
                    )
                    outputs.append(output)
                    trace.append(_baseline_trace(step, segment.text, output, snippets))
                    previous = output or "(none)"

            elif config.strategy is Strategy.SELF_REFINE:
                segments = _input_segments(instance, config, abbreviations)
                for step, segment in enumerate(segments, start=1):
                    snippets = retrieve_for(segment.text)
                    current = generate_call(
                        "baseline_sr_init",
                        target_topic=instance.target_topic,
                        snippets=_snippet_block(snippets),
                        segment=segment.text,
                    )
                    for _ in range(config.sr_iterations):
                        feedback = generate_call(
                            "baseline_sr_feedback",
                            target_topic=instance.target_topic,
                            current=current,
                        )
                        current = generate_call(
                            "baseline_sr_refine",
                            target_topic=instance.target_topic,
                            current=current,
                            feedback=feedback,
                        )
                    outputs.append(current)
                    trace.append(_baseline_trace(step, segment.text, current, snippets))

            else:
                raise ValidationError(
                    f"run_baseline cannot handle strategy {config.strategy.value!r}"
                )
        except StepFailure:
            raise
        except ImitextError as exc:
            raise StepFailure(
                instance.id, len(outputs) + 1, exc, tuple(trace), tuple(outputs)
            ) from exc
        call_count = counter.calls

    return GenerationResult(
        instance_id=instance.id,
        output_text=SEGMENT_JOINER.join(outputs),
        segments=tuple(outputs),
        trace=tuple(trace),
        call_count=call_count,
    )


def _snippet_block(snippets: Sequence[KnowledgeSnippet]) -> str:
    if not snippets:
        return "(none)"
    return "\n".join(f"- {s.text}" for s in snippets)


def run(
    instance: TaskInstance,
    config: PipelineConfig,
    backend: Backend,
    templates: TemplateSet | None = None,
    store: KnowledgeStore | None = None,
    abbreviations: frozenset[str] | None = None,
) -> GenerationResult:
    """Dispatch one instance to its strategy's runner."""
    if config.strategy is Strategy.REPA:
        return run_repa(instance, config, backend, templates, store, abbreviations)
    return run_baseline(instance, config, backend, templates, store, abbreviations)


# ---------------------------------------------------------------------------
# serialization

def _question_to_dict(question: Question) -> dict[str, Any]:
    return {
        "text": question.text,
        "origin_segment": question.origin_segment,
        "topic_anchored": question.topic_anchored,
    }


def _snippet_to_dict(snippet: KnowledgeSnippet) -> dict[str, Any]:
    return {
        "text": snippet.text,
        "source_doc_id": snippet.source_doc_id,
        "score": snippet.score,
        "channel": snippet.channel,
    }


def _fact_to_dict(fact: AdaptedFact) -> dict[str, Any]:
    return {
        "question": _question_to_dict(fact.question),
        "answer": fact.answer,
        "confidence": fact.confidence,
        "kept": fact.kept,
    }


def trace_to_dict(entry: StepTrace) -> dict[str, Any]:
    return {
        "step": entry.step,
        "input_segment": entry.input_segment,
        "clarified": entry.clarified,
        "questions": [_question_to_dict(q) for q in entry.questions],
        "snippets": [_snippet_to_dict(s) for s in entry.snippets],
        "facts": [_fact_to_dict(f) for f in entry.facts],
        "output": entry.output,
        "stm_snapshot": list(entry.stm_snapshot),
        "ltm_snapshot": entry.ltm_snapshot,
        "warnings": list(entry.warnings),
    }


def trace_from_dict(data: Mapping[str, Any]) -> StepTrace:
    return StepTrace(
        step=data["step"],
        input_segment=data["input_segment"],
        clarified=data["clarified"],
        questions=tuple(
            Question(q["text"], q["origin_segment"], q["topic_anchored"])
            for q in data.get("questions", ())
        ),
        snippets=tuple(
            KnowledgeSnippet(s["text"], s["source_doc_id"], s["score"], s["channel"])
            for s in data.get("snippets", ())
        ),
        facts=tuple(
            AdaptedFact(
                Question(
                    f["question"]["text"],
                    f["question"]["origin_segment"],
                    f["question"]["topic_anchored"],
                ),
                f["answer"],
                f["confidence"],
                f["kept"],
            )
            for f in data.get("facts", ())
        ),
        output=data["output"],
        stm_snapshot=tuple(data.get("stm_snapshot", ())),
        ltm_snapshot=data.get("ltm_snapshot", ""),
        warnings=tuple(data.get("warnings", ())),
    )


def result_to_dict(result: GenerationResult, include_trace: bool = True) -> dict[str, Any]:
    row: dict[str, Any] = {
        "instance_id": result.instance_id,
        "output_text": result.output_text,
        "segments": list(result.segments),
        "call_count": result.call_count,
    }
    if include_trace:
        row["trace"] = [trace_to_dict(t) for t in result.trace]
    return row


def result_from_dict(data: Mapping[str, Any]) -> GenerationResult:
    return GenerationResult(
        instance_id=data["instance_id"],
        output_text=data["output_text"],
        segments=tuple(data["segments"]),
        trace=tuple(trace_from_dict(t) for t in data.get("trace", ())),
        call_count=data["call_count"],
    )


def failure_to_dict(failure: StepFailure, include_trace: bool = True) -> dict[str, Any]:
    row: dict[str, Any] = {
        "instance_id": failure.instance_id,
        "failed_at_step": failure.step,
        "error": f"{type(failure.cause).__name__}: {failure.cause}",
        "segments": list(failure.partial_segments),
    }
    if include_trace:
        row["trace"] = [trace_to_dict(t) for t in failure.partial_trace]
    return row


def write_results(
    path: str,
    rows: Sequence[GenerationResult | StepFailure],
    include_trace: bool = True,
) -> None:
    serialized = []
    for row in rows:
        if isinstance(row, StepFailure):
            serialized.append(failure_to_dict(row, include_trace))
        else:
            serialized.append(result_to_dict(row, include_trace))
    write_jsonl(path, serialized)


def read_results(path: str) -> list[GenerationResult]:
    results = []
    for lineno, row in read_jsonl(path):
        if "failed_at_step" in row:
            raise ValidationError(
                f"{path}:{lineno}: row for {row.get('instance_id')!r} is a failure marker"
            )
        try:
            results.append(result_from_dict(row))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}:{lineno}: malformed result row") from exc
    return results
