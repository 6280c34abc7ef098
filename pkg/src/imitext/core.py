"""Task records, run configuration, and the shared error hierarchy.

A task pairs a source article (the exemplar) with a target topic; generation
rewrites the exemplar so it describes the target.  Records travel as JSONL
with exactly the keys ``id``, ``source_topic``, ``target_topic``,
``source_text`` and optional ``gold_text``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Iterator, Mapping

if TYPE_CHECKING:
    from .pipeline import StepTrace


class ImitextError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ImitextError):
    """Bad input data or configuration; maps to exit code 1 in the CLI."""


class MissingField(ValidationError):
    def __init__(self, field_name: str):
        self.field_name = field_name
        super().__init__(f"missing or empty required field: {field_name!r}")


class EmptySourceText(ValidationError):
    def __init__(self, instance_id: str = ""):
        self.instance_id = instance_id
        suffix = f" (instance {instance_id!r})" if instance_id else ""
        super().__init__(f"source_text is empty after trimming{suffix}")


class IdenticalTopics(ValidationError):
    def __init__(self, topic: str):
        self.topic = topic
        super().__init__(f"source and target topic are identical: {topic!r}")


class ConfigError(ValidationError):
    """Out-of-range or inconsistent pipeline configuration."""


class Strategy(str, enum.Enum):
    # "repa" = the recurrent plan-then-adapt pipeline; the remaining tokens
    # name the single-call, segment-recurrent, and iterative-refinement
    # baselines plus the zero-call topic-substitution floor.
    REPA = "repa"
    LLM = "llm"
    ROM = "rom"
    SELF_REFINE = "self_refine"
    DEFAULT = "default"


class Ablation(str, enum.Enum):
    NO_CLARIFY_STM = "no_clarify_stm"
    NO_OUTLINE = "no_outline"
    NO_REFUSAL = "no_refusal"
    NO_REVISE_LTM = "no_revise_ltm"
    NO_SEGMENT = "no_segment"


TASK_FIELDS = ("id", "source_topic", "target_topic", "source_text", "gold_text")
_REQUIRED_FIELDS = ("id", "source_topic", "target_topic", "source_text")


@dataclass(frozen=True)
class TaskInstance:
    """One generation task; immutable once constructed.

    Construction enforces the record invariants, so holding a TaskInstance is
    proof the record was valid.
    """

    id: str
    source_topic: str
    target_topic: str
    source_text: str
    gold_text: str | None = None

    def __post_init__(self) -> None:
        for name in ("id", "source_topic", "target_topic"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise MissingField(name)
        if not isinstance(self.source_text, str) or not self.source_text.strip():
            raise EmptySourceText(self.id if isinstance(self.id, str) else "")
        if self.source_topic.strip().casefold() == self.target_topic.strip().casefold():
            raise IdenticalTopics(self.source_topic)

    def to_record(self) -> dict[str, Any]:
        record = {
            "id": self.id,
            "source_topic": self.source_topic,
            "target_topic": self.target_topic,
            "source_text": self.source_text,
        }
        if self.gold_text is not None:
            record["gold_text"] = self.gold_text
        return record


def validate_instance(record: Mapping[str, Any]) -> TaskInstance:
    """Validate a raw JSONL record and build a trimmed TaskInstance.

    Raises MissingField / EmptySourceText / IdenticalTopics; never returns a
    partially-valid instance.
    """
    if not isinstance(record, Mapping):
        raise ValidationError(f"task record must be an object, got {type(record).__name__}")
    for name in _REQUIRED_FIELDS:
        if name not in record or record[name] is None:
            raise MissingField(name)
        if not isinstance(record[name], str):
            raise ValidationError(f"field {name!r} must be a string")
    trimmed = {name: record[name].strip() for name in _REQUIRED_FIELDS}
    for name in ("id", "source_topic", "target_topic"):
        if not trimmed[name]:
            raise MissingField(name)
    if not trimmed["source_text"]:
        raise EmptySourceText(trimmed["id"])
    gold = record.get("gold_text")
    if gold is not None and not isinstance(gold, str):
        raise ValidationError("field 'gold_text' must be a string when present")
    gold = gold.strip() if isinstance(gold, str) else None
    return TaskInstance(
        id=trimmed["id"],
        source_topic=trimmed["source_topic"],
        target_topic=trimmed["target_topic"],
        source_text=trimmed["source_text"],
        gold_text=gold or None,
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one generation run; validated on construction."""

    theta: float = 0.6
    stm_window: int = 2
    strategy: Strategy = Strategy.REPA
    retrieval_enabled: bool = True
    sr_iterations: int = 4
    ablations: frozenset[Ablation] = field(default_factory=frozenset)
    backend_profile: str = "mock"
    # exact-case topic matching is off by default: substitution and topic
    # anchoring match case-insensitively at word boundaries
    case_sensitive_topics: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(
            self, "ablations", frozenset(Ablation(a) for a in self.ablations)
        )
        if not isinstance(self.theta, (int, float)) or not 0.0 <= float(self.theta) <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta!r}")
        object.__setattr__(self, "theta", float(self.theta))
        if not isinstance(self.stm_window, int) or self.stm_window < 1:
            raise ConfigError(f"stm_window must be a positive integer, got {self.stm_window!r}")
        if not isinstance(self.sr_iterations, int) or self.sr_iterations < 0:
            raise ConfigError(
                f"sr_iterations must be a non-negative integer, got {self.sr_iterations!r}"
            )
        if not self.backend_profile or not isinstance(self.backend_profile, str):
            raise ConfigError("backend_profile must be a non-empty string")

    def ablated(self, ablation: Ablation) -> bool:
        return ablation in self.ablations

    def with_options(self, **changes: Any) -> "PipelineConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "stm_window": self.stm_window,
            "strategy": self.strategy.value,
            "retrieval_enabled": self.retrieval_enabled,
            "sr_iterations": self.sr_iterations,
            "ablations": sorted(a.value for a in self.ablations),
            "backend_profile": self.backend_profile,
            "case_sensitive_topics": self.case_sensitive_topics,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))


@dataclass(frozen=True)
class GenerationResult:
    """Output of one pipeline run over one task instance."""

    instance_id: str
    output_text: str
    segments: tuple[str, ...]
    trace: tuple["StepTrace", ...]
    call_count: int


# ---------------------------------------------------------------------------
# JSONL plumbing

def read_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object); blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def write_jsonl(path: str | Path, rows: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def load_tasks(path: str | Path) -> list[TaskInstance]:
    tasks: list[TaskInstance] = []
    seen: set[str] = set()
    for lineno, record in read_jsonl(path):
        try:
            instance = validate_instance(record)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        if instance.id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate task id {instance.id!r}")
        seen.add(instance.id)
        tasks.append(instance)
    if not tasks:
        raise ValidationError(f"{path}: no task records found")
    return tasks


def dump_tasks(path: str | Path, tasks: Iterable[TaskInstance]) -> None:
    write_jsonl(path, (t.to_record() for t in tasks))
