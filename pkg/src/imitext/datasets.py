"""Corpus filtering and topic pairing for building generation tasks.

A corpus record is one article about one topic.  Pairing finds topic pairs
whose articles are similar enough that one can plausibly be rewritten into
the other; each selected pair becomes a task whose gold text is the target
topic's own article.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .backends import Backend, cosine
from .core import TaskInstance, ValidationError, read_jsonl
from .segmentation import split_sentences

logger = logging.getLogger(__name__)

PAIRING_MODES = ("threshold", "top_k")
CATEGORY_RULES = ("keep", "drop")


class TooFewRecords(ValidationError):
    def __init__(self, kept: int, needed: int = 2):
        self.kept = kept
        super().__init__(
            f"only {kept} records survive the quality filter; need at least {needed}"
        )


@dataclass(frozen=True)
class CorpusRecord:
    topic: str
    text: str
    categories: tuple[str, ...] = ()
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.topic, str) or not self.topic.strip():
            raise ValidationError("corpus record needs a non-empty 'topic'")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValidationError(
                f"corpus record {self.topic!r} needs a non-empty 'text'"
            )
        object.__setattr__(self, "categories", tuple(self.categories))
        for category in self.categories:
            if not isinstance(category, str):
                raise ValidationError("categories must be strings")


@dataclass(frozen=True)
class PairingPolicy:
    """How candidate topic pairs are formed and filtered.

    ``threshold`` mode embeds topic strings and keeps pairs strictly above
    ``min_similarity``; ``top_k`` mode embeds article texts and keeps the
    ``top_k`` most similar pairs.
    """

    mode: str = "threshold"
    min_similarity: float = 0.95
    top_k: int = 500
    min_sentences: int = 3
    min_words: int = 60
    category_overlap_min: float = 0.3

    def __post_init__(self) -> None:
        if self.mode not in PAIRING_MODES:
            raise ValidationError(
                f"pairing mode must be one of {PAIRING_MODES}, got {self.mode!r}"
            )
        if not 0.0 <= self.min_similarity <= 1.0:
            raise ValidationError("min_similarity must lie in [0, 1]")
        if self.top_k < 1:
            raise ValidationError("top_k must be a positive integer")
        if self.min_sentences < 0 or self.min_words < 0:
            raise ValidationError("quality minimums must be non-negative")
        if not 0.0 <= self.category_overlap_min <= 1.0:
            raise ValidationError("category_overlap_min must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "min_similarity": self.min_similarity,
            "top_k": self.top_k,
            "min_sentences": self.min_sentences,
            "min_words": self.min_words,
            "category_overlap_min": self.category_overlap_min,
        }


def load_corpus(path: str | Path) -> list[CorpusRecord]:
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    for lineno, raw in read_jsonl(path):
        if not isinstance(raw, Mapping):
            raise ValidationError(f"{path}:{lineno}: corpus record must be an object")
        try:
            record = CorpusRecord(
                topic=raw.get("topic", ""),
                text=raw.get("text", ""),
                categories=tuple(raw.get("categories", ()) or ()),
                meta=dict(raw.get("meta", {}) or {}),
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        key = record.topic.strip().casefold()
        if key in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate topic {record.topic!r}")
        seen.add(key)
        records.append(record)
    if not records:
        raise ValidationError(f"{path}: no corpus records found")
    return records


def quality_filter(
    records: Iterable[CorpusRecord], policy: PairingPolicy
) -> list[CorpusRecord]:
    """Keep records with at least ``min_sentences`` sentences AND
    ``min_words`` whitespace-separated words (both bounds inclusive)."""
    kept = []
    for record in records:
        sentences = len(split_sentences(record.text))
        words = len(record.text.split())
        if sentences >= policy.min_sentences and words >= policy.min_words:
            kept.append(record)
        else:
            logger.debug(
                "quality filter dropped %r (%d sentences, %d words)",
                record.topic, sentences, words,
            )
    return kept


def category_overlap(a: Sequence[str], b: Sequence[str]) -> float:
    """Overlap coefficient |A∩B| / min(|A|, |B|); 0.0 when either is empty."""
    set_a = {c.strip().casefold() for c in a if c.strip()}
    set_b = {c.strip().casefold() for c in b if c.strip()}
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / min(len(set_a), len(set_b))


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def _slug(topic: str) -> str:
    slug = _SLUG_RE.sub("-", topic.casefold()).strip("-")
    return slug or "topic"


def _histogram(similarities: Sequence[float]) -> dict[str, int]:
    bins = {f"{i / 10:.1f}-{(i + 1) / 10:.1f}": 0 for i in range(10)}
    for sim in similarities:
        clamped = min(max(sim, 0.0), 1.0)
        index = min(int(clamped * 10), 9)
        bins[f"{index / 10:.1f}-{(index + 1) / 10:.1f}"] += 1
    return bins


def _task_for(source: CorpusRecord, target: CorpusRecord, used_ids: set[str]) -> TaskInstance:
    base = f"{_slug(source.topic)}--{_slug(target.topic)}"
    task_id = base
    suffix = 2
    while task_id in used_ids:
        task_id = f"{base}-{suffix}"
        suffix += 1
    used_ids.add(task_id)
    return TaskInstance(
        id=task_id,
        source_topic=source.topic,
        target_topic=target.topic,
        source_text=source.text,
        gold_text=target.text,
    )


def pair_topics(
    records: Sequence[CorpusRecord],
    policy: PairingPolicy,
    backend: Backend,
    *,
    disjoint: bool = True,
    both_directions: bool = False,
    category_rule: str = "keep",
) -> tuple[list[TaskInstance], dict[str, Any]]:
    """Form task instances from similar topic pairs.

    Pipeline: quality filter -> embed (topics in ``threshold`` mode, texts in
    ``top_k`` mode) -> all-pairs scoring -> category filter -> sort by
    descending similarity (ties lexicographic) -> per-mode selection
    (strictly above ``min_similarity``, or the first ``top_k``) -> optional
    greedy one-use-per-topic selection.  Each selected pair is oriented with
    the lexicographically smaller topic as the source; ``both_directions``
    also emits the reverse task.
    """
    if category_rule not in CATEGORY_RULES:
        raise ValidationError(
            f"category_rule must be one of {CATEGORY_RULES}, got {category_rule!r}"
        )
    records_in = len(records)
    kept = quality_filter(records, policy)
    if len(kept) < 2:
        raise TooFewRecords(len(kept))

    embed_key = (
        (lambda r: r.topic) if policy.mode == "threshold" else (lambda r: r.text)
    )
    vectors = [backend.embed(embed_key(record)) for record in kept]

    scored: list[tuple[float, CorpusRecord, CorpusRecord]] = []
    all_sims: list[float] = []
    for i in range(len(kept)):
        for j in range(i + 1, len(kept)):
            similarity = cosine(vectors[i], vectors[j])
            all_sims.append(similarity)
            first, second = sorted((kept[i], kept[j]), key=lambda r: r.topic)
            scored.append((similarity, first, second))

    filtered = []
    for similarity, source, target in scored:
        # the overlap rule only applies when both records carry category tags
        if source.categories and target.categories:
            overlap = category_overlap(source.categories, target.categories)
            related = overlap >= policy.category_overlap_min
            if (category_rule == "keep") != related:
                continue
        filtered.append((similarity, source, target))
    filtered.sort(key=lambda c: (-c[0], c[1].topic, c[2].topic))

    if policy.mode == "threshold":
        candidates = [c for c in filtered if c[0] > policy.min_similarity]
    else:
        candidates = filtered[: policy.top_k]

    selected: list[tuple[float, CorpusRecord, CorpusRecord]] = []
    used_topics: set[str] = set()
    for similarity, source, target in candidates:
        if disjoint:
            key_s = source.topic.casefold()
            key_t = target.topic.casefold()
            if key_s in used_topics or key_t in used_topics:
                continue
            used_topics.update((key_s, key_t))
        selected.append((similarity, source, target))

    tasks: list[TaskInstance] = []
    used_ids: set[str] = set()
    for _similarity, source, target in selected:
        tasks.append(_task_for(source, target, used_ids))
        if both_directions:
            tasks.append(_task_for(target, source, used_ids))

    stats = {
        "records_in": records_in,
        "records_kept": len(kept),
        "candidates": len(candidates),
        "pairs": len(selected),
        "tasks": len(tasks),
        "similarity_histogram": _histogram(all_sims),
        "policy": policy.to_dict(),
        "disjoint": disjoint,
        "both_directions": both_directions,
        "category_rule": category_rule,
    }
    logger.info(
        "paired %d/%d candidates into %d tasks", len(selected), len(candidates), len(tasks)
    )
    return tasks, stats
