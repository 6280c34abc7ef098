"""Planning half of a generation step: clarify, then outline.

Clarify rewrites the current source segment into a self-contained sentence
using a sliding window of recently clarified segments; outline turns the
clarified segment into topic-centric questions and anchors them to the target
topic by word-boundary substitution.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .backends import Backend, BackendRequest, Capability, ComponentTag
from .core import Ablation, PipelineConfig
from .segmentation import Segment
from .templates_io import TemplateSet

logger = logging.getLogger(__name__)

_LIST_MARKER_RE = re.compile(r"^\s*(?:\d+[.)]|[-*•]+)\s*")


@dataclass(frozen=True)
class ShortTermMemory:
    """Sliding window over the most recent clarified segments."""

    capacity: int
    window: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("short-term memory capacity must be >= 1")

    @property
    def rendered(self) -> str:
        return "\n".join(self.window) if self.window else "(none)"

    def push(self, text: str) -> "ShortTermMemory":
        kept = (*self.window, text)[-self.capacity :]
        return ShortTermMemory(capacity=self.capacity, window=kept)


@dataclass(frozen=True)
class Question:
    text: str
    origin_segment: int
    topic_anchored: bool


def _topic_pattern(topic: str, case_sensitive: bool) -> re.Pattern[str]:
    flags = 0 if case_sensitive else re.IGNORECASE
    # lookarounds instead of \b so topics ending in punctuation still anchor
    return re.compile(rf"(?<!\w){re.escape(topic)}(?!\w)", flags)


def substitute_topic(
    text: str, source_topic: str, target_topic: str, case_sensitive: bool = False
) -> str:
    """Replace word-boundary occurrences of the source topic with the target."""
    # callable replacement: the target is inserted literally, never reparsed
    return _topic_pattern(source_topic, case_sensitive).sub(
        lambda _m: target_topic, text
    )


def contains_topic(text: str, topic: str, case_sensitive: bool = False) -> bool:
    return _topic_pattern(topic, case_sensitive).search(text) is not None


class Planner:
    def __init__(self, backend: Backend, templates: TemplateSet, config: PipelineConfig):
        self.backend = backend
        self.templates = templates
        self.config = config
        self._warnings: list[str] = []

    def drain_warnings(self) -> list[str]:
        drained, self._warnings = self._warnings, []
        return drained

    def clarify(
        self, segment: Segment, stm: ShortTermMemory
    ) -> tuple[str, ShortTermMemory]:
        """One clarification call; returns the rewrite and the updated memory.

        Under the no_clarify_stm ablation the segment text is passed through
        verbatim, the memory is left untouched, and no call is made.
        """
        if self.config.ablated(Ablation.NO_CLARIFY_STM):
            return segment.text, stm
        payload = self.templates.render(
            "clarify", stm=stm.rendered, segment=segment.text
        )
        response = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.CLARIFY, payload)
        ).strip()
        if not response:
            self._warnings.append(
                f"clarify returned empty text for segment {segment.index}; using the segment as-is"
            )
            response = segment.text
        return response, stm.push(response)

    def outline(
        self,
        clarified_text: str,
        source_topic: str,
        target_topic: str,
        origin_segment: int,
    ) -> list[Question]:
        """One outline call; parses newline-separated questions and anchors
        them to the target topic.  Empty under the no_outline ablation."""
        if self.config.ablated(Ablation.NO_OUTLINE):
            return []
        payload = self.templates.render(
            "outline", segment=clarified_text, source_topic=source_topic
        )
        response = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.OUTLINE, payload)
        )
        questions: list[Question] = []
        for line in response.splitlines():
            stripped = _LIST_MARKER_RE.sub("", line).strip()
            if not stripped:
                continue
            if not stripped.endswith("?"):
                self._warnings.append(
                    f"outline produced a non-question line (kept): {stripped!r}"
                )
            substituted = substitute_topic(
                stripped, source_topic, target_topic,
                case_sensitive=self.config.case_sensitive_topics,
            )
            questions.append(
                Question(
                    text=substituted,
                    origin_segment=origin_segment,
                    topic_anchored=contains_topic(
                        substituted, target_topic,
                        case_sensitive=self.config.case_sensitive_topics,
                    ),
                )
            )
        if not questions:
            self._warnings.append(
                f"outline returned no questions for segment {origin_segment}"
            )
        return questions
