"""Model access: capabilities, call accounting, and cassette record/replay.

Every text-producing call flows through :meth:`Backend.complete` with a
component tag, so call counts and token totals are attributable per pipeline
component.  A cassette stores ``digest -> response`` pairs as JSONL; replay
mode never performs a live call and raises :class:`ReplayMiss` for any digest
absent from the cassette.

Offline capability implementations (used by the ``mock`` and ``offline``
profiles and forced under replay):

* embeddings — hash-bucketed term-frequency vectors of dimension 256;
* NLI — a fixture lookup keyed by text digests, with the reflexive rule
  "premise equals hypothesis -> entail" and default ``neutral``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .core import ImitextError, ValidationError, read_jsonl

logger = logging.getLogger(__name__)

EMBED_DIM = 256
API_KEY_ENV = "IMITEXT_API_KEY"
BASE_URL_ENV = "IMITEXT_BASE_URL"

NLI_ENTAIL = "entail"
NLI_CONTRADICT = "contradict"
NLI_NEUTRAL = "neutral"
NLI_LABELS = (NLI_ENTAIL, NLI_CONTRADICT, NLI_NEUTRAL)

# wire-label variants tolerated from servers, normalized to our vocabulary
_NLI_ALIASES = {
    "entail": NLI_ENTAIL,
    "entailment": NLI_ENTAIL,
    "contradict": NLI_CONTRADICT,
    "contradiction": NLI_CONTRADICT,
    "neutral": NLI_NEUTRAL,
}


class BackendError(ImitextError):
    """Base class for transport/replay failures; exit code 2 in the CLI."""


class TransportError(BackendError):
    pass


class BackendRefused(BackendError):
    def __init__(self, status: int, body: str):
        self.status = status
        self.body = body
        super().__init__(f"backend refused with status {status}: {body[:200]}")


class ReplayMiss(BackendError):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no cassette entry for digest {digest}")


class DimensionMismatch(BackendError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"embedding dimension mismatch: expected {expected}, got {got}")


class Capability(str, enum.Enum):
    GENERATE = "generate"
    EMBED = "embed"
    NLI = "nli"
    JUDGE = "judge"


class ComponentTag(str, enum.Enum):
    CLARIFY = "clarify"
    OUTLINE = "outline"
    QA = "qa"
    WRITE = "write"
    SUMMARIZE = "summarize"
    JUDGE_IMITATIVENESS = "judge_imitativeness"
    JUDGE_ADAPTIVENESS = "judge_adaptiveness"
    BASELINE = "baseline"


@dataclass(frozen=True)
class BackendRequest:
    capability: Capability
    component_tag: ComponentTag
    payload: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "capability", Capability(self.capability))
        object.__setattr__(self, "component_tag", ComponentTag(self.component_tag))
        if not isinstance(self.payload, str) or not self.payload:
            raise ValidationError("backend request payload must be a non-empty string")


def request_digest(request: BackendRequest) -> str:
    """Stable byte-level digest of capability, component tag, and payload."""
    material = "\x1f".join(
        (request.capability.value, request.component_tag.value, request.payload)
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# offline embeddings

def offline_embedding(text: str, dim: int = EMBED_DIM) -> list[float]:
    """Hash-bucketed term-frequency vector; deterministic across platforms."""
    from .segmentation import content_tokens

    if not text or text.isspace():
        raise ValidationError("cannot embed empty text")
    vector = [0.0] * dim
    for token in content_tokens(text):
        bucket = int.from_bytes(
            hashlib.sha256(token.encode("utf-8")).digest()[:4], "big"
        ) % dim
        vector[bucket] += 1.0
    return vector


def cosine(a: Iterable[float], b: Iterable[float]) -> float:
    """Cosine similarity; zero vectors score 0.0 instead of dividing by zero."""
    dot = norm_a = norm_b = 0.0
    for x, y in zip(a, b):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / math.sqrt(norm_a * norm_b)


# ---------------------------------------------------------------------------
# call accounting

@dataclass
class TagStats:
    calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "calls": self.calls,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


class CallStats:
    """Per-component-tag call and token counters; thread-safe, monotone.

    Token counts are whitespace token counts of payloads and responses (no
    model tokenizer is available offline); cost is completion tokens times a
    per-token rate.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._per_tag: dict[str, TagStats] = {}

    def add(self, tag: ComponentTag, prompt_tokens: int, completion_tokens: int) -> None:
        with self._lock:
            stats = self._per_tag.setdefault(tag.value, TagStats())
            stats.calls += 1
            stats.prompt_tokens += prompt_tokens
            stats.completion_tokens += completion_tokens

    def per_tag(self) -> dict[str, TagStats]:
        with self._lock:
            return {
                tag: TagStats(s.calls, s.prompt_tokens, s.completion_tokens)
                for tag, s in self._per_tag.items()
            }

    def totals(self) -> TagStats:
        total = TagStats()
        for stats in self.per_tag().values():
            total.calls += stats.calls
            total.prompt_tokens += stats.prompt_tokens
            total.completion_tokens += stats.completion_tokens
        return total

    def cost(self, rate_per_completion_token: float) -> float:
        return self.totals().completion_tokens * rate_per_completion_token

    def to_dict(self) -> dict[str, Any]:
        per_tag = {tag: s.to_dict() for tag, s in sorted(self.per_tag().items())}
        return {"per_tag": per_tag, "totals": self.totals().to_dict()}


class CallCounter:
    """Scoped counter of complete() calls, used for per-instance accounting."""

    def __init__(self) -> None:
        self.calls = 0

    def bump(self) -> None:
        self.calls += 1


# ---------------------------------------------------------------------------
# cassette

CASSETTE_MODES = ("record", "replay", "passthrough")


class Cassette:
    """JSONL request/response store: ``{digest, component_tag, response}``."""

    def __init__(self, path: str | Path, mode: str):
        if mode not in CASSETTE_MODES:
            raise ValidationError(
                f"cassette mode must be one of {CASSETTE_MODES}, got {mode!r}"
            )
        self.path = Path(path)
        self.mode = mode
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            for lineno, row in read_jsonl(self.path):
                if not isinstance(row, dict) or "digest" not in row or "response" not in row:
                    raise ValidationError(
                        f"{self.path}:{lineno}: cassette rows need 'digest' and 'response'"
                    )
                # later entries win, matching append-order recording
                self._entries[row["digest"]] = row["response"]
        elif mode == "replay":
            raise ReplayMiss(f"<cassette file missing: {self.path}>")

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, digest: str) -> str | None:
        return self._entries.get(digest)

    def store(self, digest: str, component_tag: ComponentTag, response: str) -> None:
        with self._lock:
            if self._entries.get(digest) == response:
                return
            self._entries[digest] = response
            row = {
                "digest": digest,
                "component_tag": component_tag.value,
                "response": response,
            }
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                handle.write("\n")


# ---------------------------------------------------------------------------
# NLI stub

class NliStub:
    """Fixture-backed NLI: digest lookup, reflexive entailment, else neutral."""

    def __init__(self, fixture: Mapping[tuple[str, str], str] | None = None,
                 strict: bool = False):
        self._fixture = dict(fixture or {})
        self.strict = strict

    @classmethod
    def from_jsonl(cls, path: str | Path, strict: bool = False) -> "NliStub":
        fixture: dict[tuple[str, str], str] = {}
        for lineno, row in read_jsonl(path):
            try:
                key = (row["premise_digest"], row["hypothesis_digest"])
                label = _normalize_nli_label(row["label"])
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad NLI fixture row") from exc
            fixture[key] = label
        return cls(fixture, strict=strict)

    def classify(self, premise: str, hypothesis: str) -> str:
        key = (text_digest(premise), text_digest(hypothesis))
        if key in self._fixture:
            return self._fixture[key]
        if premise == hypothesis:
            return NLI_ENTAIL
        if self.strict:
            raise ReplayMiss(f"nli:{key[0][:12]}:{key[1][:12]}")
        return NLI_NEUTRAL


def _normalize_nli_label(raw: Any) -> str:
    label = str(raw).strip().lower()
    if label not in _NLI_ALIASES:
        raise TransportError(f"unrecognized NLI label: {raw!r}")
    return _NLI_ALIASES[label]


# ---------------------------------------------------------------------------
# transports

_HEADER_RE = re.compile(r"^[A-Z][A-Za-z ()-]*:$")


def _payload_section(payload: str, header: str) -> str:
    """Extract the block following a ``Header:`` line in a rendered prompt."""
    lines = payload.splitlines()
    collected: list[str] = []
    inside = False
    for line in lines:
        if line.strip() == header:
            inside = True
            collected = []
            continue
        if inside and _HEADER_RE.match(line.strip()):
            break
        if inside:
            collected.append(line)
    return "\n".join(collected).strip()


class ScriptedTransport:
    """Deterministic offline stand-in for a text model.

    Responses are pure functions of the rendered prompt, so recording a
    cassette from this transport and replaying it later is byte-stable.
    """

    name = "mock"

    def complete(self, request: BackendRequest) -> str:
        tag = request.component_tag
        payload = request.payload
        if tag is ComponentTag.CLARIFY:
            return _payload_section(payload, "Segment:")
        if tag is ComponentTag.OUTLINE:
            topic_match = re.search(r'article about "(.+?)"', payload)
            topic = topic_match.group(1) if topic_match else "the subject"
            return (
                f"1. What is {topic}?\n"
                f"2. What does the segment say about {topic}?"
            )
        if tag is ComponentTag.QA:
            return self._answer_questions(payload)
        if tag is ComponentTag.WRITE:
            if "Revised segment:" in payload:
                return _payload_section(payload, "Draft segment:")
            facts = _payload_section(payload, "Facts:")
            segment = _payload_section(payload, "Source segment:")
            answers = [
                line.lstrip("- ").strip()
                for line in facts.splitlines()
                if line.strip() and line.strip() != "(none)"
            ]
            return " ".join(answers) if answers else segment
        if tag is ComponentTag.SUMMARIZE:
            current = _payload_section(payload, "Current summary:")
            if current == "(none)":
                current = ""
            new = _payload_section(payload, "New segment:")
            combined = f"{current} {new}".strip()
            words = combined.split()
            return " ".join(words[-120:])
        if tag in (ComponentTag.JUDGE_IMITATIVENESS, ComponentTag.JUDGE_ADAPTIVENESS):
            rating = 1 + hashlib.sha256(payload.encode("utf-8")).digest()[0] % 5
            return f"Rating: {rating}"
        if tag is ComponentTag.BASELINE:
            return self._baseline(payload)
        raise TransportError(f"scripted transport has no handler for tag {tag}")

    @staticmethod
    def _answer_questions(payload: str) -> str:
        questions = [
            re.sub(r"^\s*(?:\d+[.)]|[-*])\s*", "", line).strip()
            for line in _payload_section(payload, "Questions:").splitlines()
            if line.strip()
        ]
        snippets = [
            line.lstrip("- ").strip()
            for line in _payload_section(payload, "Snippets:").splitlines()
            if line.strip() and line.strip() != "(none)"
        ]
        blocks = []
        for question in questions:
            seed = hashlib.sha256(question.encode("utf-8")).digest()[0]
            confidence = 0.30 + 0.65 * seed / 255.0
            if snippets:
                source = snippets[seed % len(snippets)]
                answer = " ".join(source.split()[:12])
            else:
                answer = "NA"
                confidence = min(confidence, 0.40)
            blocks.append(f"Answer: {answer}\nConfidence: {confidence:.2f}")
        return "\n".join(blocks)

    @staticmethod
    def _baseline(payload: str) -> str:
        if "Rewritten article:" in payload:
            return _payload_section(payload, "Source article:")
        if "Feedback:" in payload and "Improved segment:" not in payload and "Next source segment:" not in payload:
            if _payload_section(payload, "Feedback:") == "":
                return "Name the subject explicitly and keep its specific figures."
        if "Improved segment:" in payload:
            return _payload_section(payload, "Rewritten segment:")
        if "Next source segment:" in payload:
            return _payload_section(payload, "Next source segment:")
        return _payload_section(payload, "Source segment:")


class HttpTransport:
    """JSON-over-HTTP transport; wire bodies are part of the public contract.

    ``generate``/``judge``: POST {"prompt": ...} -> {"text": ...}
    ``embed``:              POST {"text": ...}   -> {"vector": [...]}
    ``nli``:                POST {"premise": ..., "hypothesis": ...} -> {"label": ...}

    The API key is read from the environment and sent as a bearer header; it
    is never logged.
    """

    name = "http"

    PATHS = {
        Capability.GENERATE: "/generate",
        Capability.JUDGE: "/generate",
        Capability.EMBED: "/embed",
        Capability.NLI: "/nli",
    }

    def __init__(self, base_url: str, paths: Mapping[Capability, str] | None = None,
                 timeout: float = 60.0):
        if not base_url:
            raise ValidationError("http transport requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.paths = dict(self.PATHS)
        if paths:
            self.paths.update(paths)
        self.timeout = timeout

    def _post(self, capability: Capability, body: Mapping[str, Any]) -> Mapping[str, Any]:
        import requests

        url = self.base_url + self.paths[capability]
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        logger.debug("POST %s (%d-byte body)", url, len(json.dumps(body)))
        try:
            response = requests.post(url, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if response.status_code < 200 or response.status_code >= 300:
            raise BackendRefused(response.status_code, response.text)
        try:
            return response.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response from {url}") from exc

    def complete(self, request: BackendRequest) -> str:
        data = self._post(request.capability, {"prompt": request.payload})
        if "text" not in data or not isinstance(data["text"], str):
            raise TransportError("generate response missing string field 'text'")
        return data["text"]

    def embed(self, text: str) -> list[float]:
        data = self._post(Capability.EMBED, {"text": text})
        vector = data.get("vector")
        if not isinstance(vector, list) or not all(
            isinstance(x, (int, float)) for x in vector
        ):
            raise TransportError("embed response missing numeric field 'vector'")
        return [float(x) for x in vector]

    def classify_nli(self, premise: str, hypothesis: str) -> str:
        data = self._post(Capability.NLI, {"premise": premise, "hypothesis": hypothesis})
        if "label" not in data:
            raise TransportError("nli response missing field 'label'")
        return _normalize_nli_label(data["label"])


# ---------------------------------------------------------------------------
# backend facade

class Backend:
    """Single entry point for all model calls, with accounting and cassette.

    Replay mode answers complete() from the cassette only and forces the
    offline embedding/NLI implementations, so a replayed run performs no
    network I/O at all.
    """

    def __init__(
        self,
        transport: ScriptedTransport | HttpTransport | None = None,
        *,
        cassette: Cassette | None = None,
        nli: NliStub | None = None,
        embed_dim: int = EMBED_DIM,
        profile_name: str = "mock",
    ):
        self.transport = transport
        self.cassette = cassette
        self.nli = nli or NliStub()
        self.embed_dim = embed_dim
        self.profile_name = profile_name
        self.stats = CallStats()
        self._scopes = threading.local()

    # -- accounting scopes ---------------------------------------------------
    def count_scope(self) -> "_CounterScope":
        return _CounterScope(self)

    def _active_counters(self) -> list[CallCounter]:
        counters = getattr(self._scopes, "stack", None)
        if counters is None:
            counters = []
            self._scopes.stack = counters
        return counters

    # -- capabilities --------------------------------------------------------
    def complete(self, request: BackendRequest) -> str:
        digest = request_digest(request)
        # explicit None check: an empty cassette is len()==0 and thus falsy
        mode = self.cassette.mode if self.cassette is not None else None
        if mode == "replay":
            response = self.cassette.lookup(digest)
            if response is None:
                raise ReplayMiss(digest)
        else:
            if self.transport is None:
                raise TransportError(
                    f"profile {self.profile_name!r} has no live transport for complete()"
                )
            response = self.transport.complete(request)
            if mode == "record":
                self.cassette.store(digest, request.component_tag, response)
        self.stats.add(
            request.component_tag,
            prompt_tokens=len(request.payload.split()),
            completion_tokens=len(response.split()),
        )
        for counter in self._active_counters():
            counter.bump()
        logger.debug(
            "complete tag=%s digest=%s chars=%d",
            request.component_tag.value, digest[:12], len(response),
        )
        return response

    def embed(self, text: str) -> list[float]:
        replaying = self.cassette is not None and self.cassette.mode == "replay"
        if (
            not replaying
            and self.transport is not None
            and hasattr(self.transport, "embed")
        ):
            vector = self.transport.embed(text)
            if len(vector) != self.embed_dim:
                raise DimensionMismatch(self.embed_dim, len(vector))
            return vector
        return offline_embedding(text, self.embed_dim)

    def classify_nli(self, premise: str, hypothesis: str) -> str:
        if not premise or not premise.strip():
            raise ValidationError("NLI premise must be non-empty")
        if not hypothesis or not hypothesis.strip():
            raise ValidationError("NLI hypothesis must be non-empty")
        replaying = self.cassette is not None and self.cassette.mode == "replay"
        if (
            not replaying
            and self.transport is not None
            and hasattr(self.transport, "classify_nli")
        ):
            return self.transport.classify_nli(premise, hypothesis)
        return self.nli.classify(premise, hypothesis)

    def call_stats(self) -> CallStats:
        return self.stats


class _CounterScope:
    def __init__(self, backend: Backend):
        self._backend = backend
        self.counter = CallCounter()

    def __enter__(self) -> CallCounter:
        self._backend._active_counters().append(self.counter)
        return self.counter

    def __exit__(self, *exc_info: Any) -> None:
        self._backend._active_counters().remove(self.counter)


PROFILES = ("mock", "offline", "http")


def make_backend(
    profile: str = "mock",
    *,
    cassette_path: str | Path | None = None,
    cassette_mode: str | None = None,
    nli_fixture: str | Path | None = None,
    nli_strict: bool = False,
    base_url: str | None = None,
    embed_dim: int = EMBED_DIM,
) -> Backend:
    """Build a backend for a named profile.

    ``mock`` — deterministic scripted responses, offline embed/NLI.
    ``offline`` — no live generation (complete() requires cassette replay),
    offline embed/NLI.
    ``http`` — JSON-over-HTTP for every capability; base URL from argument or
    the environment.
    """
    cassette = None
    if cassette_path is not None:
        cassette = Cassette(cassette_path, cassette_mode or "replay")
    elif cassette_mode is not None:
        raise ValidationError("cassette mode given without a cassette path")

    nli = None
    if nli_fixture is not None:
        nli = NliStub.from_jsonl(nli_fixture, strict=nli_strict)
    elif nli_strict:
        nli = NliStub(strict=True)

    if profile == "mock":
        return Backend(ScriptedTransport(), cassette=cassette, nli=nli,
                       embed_dim=embed_dim, profile_name=profile)
    if profile == "offline":
        return Backend(None, cassette=cassette, nli=nli,
                       embed_dim=embed_dim, profile_name=profile)
    if profile == "http":
        url = base_url or os.environ.get(BASE_URL_ENV)
        if not url:
            raise ValidationError(
                f"http profile needs a base URL (flag/config or ${BASE_URL_ENV})"
            )
        return Backend(HttpTransport(url), cassette=cassette, nli=nli,
                       embed_dim=embed_dim, profile_name=profile)
    raise ValidationError(f"unknown backend profile {profile!r} (expected one of {PROFILES})")
