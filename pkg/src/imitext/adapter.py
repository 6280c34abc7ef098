"""Adaptation half of a generation step: retrieve, answer, write, remember.

Retrieval runs two channels over a JSONL knowledge store — one keyed on the
target topic, one keyed on each planned question — and deduplicates by
document id.  Calibrated QA answers the questions against the retrieved
snippets and keeps only answers whose verbalized confidence clears the
threshold.  Writing drafts a segment from the kept facts plus the clarified
source segment, then revises it against the long-term memory summary, which
is finally folded forward.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .backends import Backend, BackendRequest, Capability, ComponentTag
from .core import Ablation, ImitextError, PipelineConfig, ValidationError, read_jsonl
from .planner import Question
from .segmentation import content_tokens
from .templates_io import TemplateSet

logger = logging.getLogger(__name__)

K_TOPIC_DEFAULT = 1
K_QUERY_DEFAULT = 2

CHANNEL_PER_TOPIC = "per_topic"
CHANNEL_PER_QUERY = "per_query"


class EmptyStore(ImitextError):
    def __init__(self) -> None:
        super().__init__("cannot retrieve from an empty knowledge store")


@dataclass(frozen=True)
class KnowledgeDoc:
    doc_id: str
    topic: str
    text: str


@dataclass(frozen=True)
class KnowledgeSnippet:
    text: str
    source_doc_id: str
    score: float
    channel: str  # per_topic | per_query


@dataclass(frozen=True)
class AdaptedFact:
    question: Question
    answer: str
    confidence: float
    kept: bool


@dataclass(frozen=True)
class LongTermMemory:
    summary: str = ""


class KnowledgeStore:
    """In-memory view over a JSONL store of ``{doc_id, topic, text}`` rows."""

    def __init__(self, docs: Iterable[KnowledgeDoc]):
        self.docs = tuple(docs)
        seen: set[str] = set()
        for doc in self.docs:
            if doc.doc_id in seen:
                raise ValidationError(f"duplicate knowledge doc_id: {doc.doc_id!r}")
            seen.add(doc.doc_id)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "KnowledgeStore":
        docs = []
        for lineno, row in read_jsonl(path):
            try:
                docs.append(
                    KnowledgeDoc(
                        doc_id=str(row["doc_id"]),
                        topic=str(row["topic"]),
                        text=str(row["text"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ValidationError(
                    f"{path}:{lineno}: knowledge rows need doc_id, topic, text"
                ) from exc
        return cls(docs)

    def __len__(self) -> int:
        return len(self.docs)


class Bm25Index:
    """Okapi ranking over pre-tokenized documents (k1=1.2, b=0.75)."""

    def __init__(self, token_lists: Sequence[Sequence[str]], k1: float = 1.2, b: float = 0.75):
        self.token_lists = [list(t) for t in token_lists]
        self.k1 = k1
        self.b = b
        self.n_docs = len(self.token_lists)
        self.avgdl = (
            sum(len(d) for d in self.token_lists) / self.n_docs if self.n_docs else 0.0
        )
        self.doc_freq: dict[str, int] = {}
        for tokens in self.token_lists:
            for term in set(tokens):
                self.doc_freq[term] = self.doc_freq.get(term, 0) + 1

    def scores(self, query_tokens: Sequence[str]) -> list[float]:
        out = []
        for tokens in self.token_lists:
            score = 0.0
            length = len(tokens)
            for term in set(query_tokens):
                df = self.doc_freq.get(term, 0)
                if df == 0:
                    continue
                tf = tokens.count(term)
                if tf == 0:
                    continue
                idf = math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)
                denom = tf + self.k1 * (1.0 - self.b + self.b * length / self.avgdl)
                score += idf * tf * (self.k1 + 1.0) / denom
            out.append(score)
        return out


_ANSWER_RE = re.compile(r"^\s*Answer:\s*(.*)\s*$")
_CONFIDENCE_RE = re.compile(r"^\s*Confidence:\s*(\S+)\s*$")


class Adapter:
    def __init__(
        self,
        backend: Backend,
        templates: TemplateSet,
        config: PipelineConfig,
        store: KnowledgeStore | None = None,
        k_topic: int = K_TOPIC_DEFAULT,
        k_query: int = K_QUERY_DEFAULT,
    ):
        self.backend = backend
        self.templates = templates
        self.config = config
        self.store = store
        self.k_topic = k_topic
        self.k_query = k_query
        self._warnings: list[str] = []
        self._topic_index: Bm25Index | None = None
        self._text_index: Bm25Index | None = None

    def drain_warnings(self) -> list[str]:
        drained, self._warnings = self._warnings, []
        return drained

    # -- retrieval -----------------------------------------------------------
    def _indexes(self) -> tuple[Bm25Index, Bm25Index]:
        assert self.store is not None
        if self._topic_index is None:
            self._topic_index = Bm25Index(
                [content_tokens(d.topic) for d in self.store.docs]
            )
            self._text_index = Bm25Index(
                [content_tokens(d.text) for d in self.store.docs]
            )
        assert self._text_index is not None
        return self._topic_index, self._text_index

    def retrieve(
        self, target_topic: str, queries: Sequence[Question | str]
    ) -> list[KnowledgeSnippet]:
        """Union of the per-topic and per-query channels, deduplicated.

        Returns [] when retrieval is disabled; raises EmptyStore when enabled
        with no documents to search.
        """
        if not self.config.retrieval_enabled:
            return []
        if self.store is None or len(self.store) == 0:
            raise EmptyStore()
        topic_index, text_index = self._indexes()
        docs = self.store.docs

        snippets: list[KnowledgeSnippet] = []
        topic_key = " ".join(content_tokens(target_topic))
        topic_scores = topic_index.scores(content_tokens(target_topic))
        ranked = sorted(
            range(len(docs)),
            key=lambda i: (
                0 if " ".join(content_tokens(docs[i].topic)) == topic_key else 1,
                -topic_scores[i],
                docs[i].doc_id,
            ),
        )
        for i in ranked[: self.k_topic]:
            exact = " ".join(content_tokens(docs[i].topic)) == topic_key
            if not exact and topic_scores[i] <= 0.0:
                continue  # nothing topical to offer
            snippets.append(
                KnowledgeSnippet(
                    text=docs[i].text,
                    source_doc_id=docs[i].doc_id,
                    score=1.0 if exact else topic_scores[i],
                    channel=CHANNEL_PER_TOPIC,
                )
            )

        for query in queries:
            query_text = query.text if isinstance(query, Question) else query
            scores = text_index.scores(content_tokens(query_text))
            order = sorted(
                range(len(docs)), key=lambda i: (-scores[i], docs[i].doc_id)
            )
            taken = 0
            for i in order:
                if taken >= self.k_query:
                    break
                if scores[i] <= 0.0:
                    break
                snippets.append(
                    KnowledgeSnippet(
                        text=docs[i].text,
                        source_doc_id=docs[i].doc_id,
                        score=scores[i],
                        channel=CHANNEL_PER_QUERY,
                    )
                )
                taken += 1

        deduped: list[KnowledgeSnippet] = []
        seen: set[str] = set()
        for snippet in snippets:
            if snippet.source_doc_id in seen:
                continue
            seen.add(snippet.source_doc_id)
            deduped.append(snippet)
        return deduped

    # -- calibrated QA -------------------------------------------------------
    def calibrated_qa(
        self, questions: Sequence[Question], snippets: Sequence[KnowledgeSnippet]
    ) -> list[AdaptedFact]:
        """One QA call for all questions; answers below theta are refused.

        kept is exactly ``confidence >= theta`` unless the no_refusal ablation
        is active, in which case every answer is kept.
        """
        if not questions:
            return []
        payload = self.templates.render(
            "qa",
            snippets=_render_snippets(snippets),
            questions="\n".join(
                f"{i}. {q.text}" for i, q in enumerate(questions, start=1)
            ),
        )
        response = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.QA, payload)
        )
        pairs = self._parse_qa_pairs(response)
        if len(pairs) < len(questions):
            self._warnings.append(
                f"qa returned {len(pairs)} answers for {len(questions)} questions"
            )
        elif len(pairs) > len(questions):
            self._warnings.append(
                f"qa returned {len(pairs) - len(questions)} extra answer blocks (ignored)"
            )
        no_refusal = self.config.ablated(Ablation.NO_REFUSAL)
        facts = []
        for i, question in enumerate(questions):
            answer, confidence = pairs[i] if i < len(pairs) else ("", 0.0)
            kept = True if no_refusal else confidence >= self.config.theta
            facts.append(
                AdaptedFact(
                    question=question, answer=answer, confidence=confidence, kept=kept
                )
            )
        return facts

    def _parse_qa_pairs(self, response: str) -> list[tuple[str, float]]:
        pairs: list[tuple[str, float]] = []
        pending_answer: str | None = None
        for line in response.splitlines():
            answer_match = _ANSWER_RE.match(line)
            if answer_match:
                if pending_answer is not None:
                    self._warnings.append(
                        "qa answer had no confidence line; treating it as refused"
                    )
                    pairs.append((pending_answer, 0.0))
                pending_answer = answer_match.group(1).strip()
                continue
            confidence_match = _CONFIDENCE_RE.match(line)
            if confidence_match and pending_answer is not None:
                pairs.append(
                    (pending_answer, self._parse_confidence(confidence_match.group(1)))
                )
                pending_answer = None
        if pending_answer is not None:
            self._warnings.append(
                "qa answer had no confidence line; treating it as refused"
            )
            pairs.append((pending_answer, 0.0))
        return pairs

    def _parse_confidence(self, raw: str) -> float:
        try:
            value = float(raw.rstrip("%"))
        except ValueError:
            self._warnings.append(f"unparseable confidence {raw!r}; treating as 0")
            return 0.0
        if raw.rstrip().endswith("%"):
            value /= 100.0
        if value < 0.0 or value > 1.0:
            self._warnings.append(f"confidence {value} outside [0, 1]; clamped")
            value = min(1.0, max(0.0, value))
        return value

    # -- writing -------------------------------------------------------------
    def write(
        self,
        facts: Sequence[AdaptedFact],
        ltm: LongTermMemory,
        source_segment_clarified: str,
        target_topic: str,
        snippets: Sequence[KnowledgeSnippet] = (),
    ) -> str:
        """Draft from kept facts (plus raw snippets when QA was ablated away),
        then revise against the long-term memory summary.  The revise call is
        skipped under the no_revise_ltm ablation."""
        fact_lines = [f"- {fact.answer}" for fact in facts if fact.kept and fact.answer]
        fact_lines.extend(f"- {snippet.text}" for snippet in snippets)
        draft_payload = self.templates.render(
            "write_draft",
            target_topic=target_topic,
            facts="\n".join(fact_lines) if fact_lines else "(none)",
            segment=source_segment_clarified,
        )
        draft = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.WRITE, draft_payload)
        ).strip()
        if not draft:
            self._warnings.append("write draft was empty; using the clarified segment")
            draft = source_segment_clarified
        if self.config.ablated(Ablation.NO_REVISE_LTM):
            return draft
        revise_payload = self.templates.render(
            "write_revise", ltm=ltm.summary or "(none)", draft=draft
        )
        revised = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.WRITE, revise_payload)
        ).strip()
        if not revised:
            self._warnings.append("write revision was empty; keeping the draft")
            revised = draft
        return revised

    # -- long-term memory ----------------------------------------------------
    def summarize(self, ltm: LongTermMemory, new_segment: str) -> LongTermMemory:
        payload = self.templates.render(
            "summarize", ltm=ltm.summary or "(none)", segment=new_segment
        )
        response = self.backend.complete(
            BackendRequest(Capability.GENERATE, ComponentTag.SUMMARIZE, payload)
        ).strip()
        if not response:
            self._warnings.append("summarize returned empty text; keeping prior summary")
            return ltm
        return LongTermMemory(summary=response)


def _render_snippets(snippets: Sequence[KnowledgeSnippet]) -> str:
    if not snippets:
        return "(none)"
    return "\n".join(f"- {s.text}" for s in snippets)
