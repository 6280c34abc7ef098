"""Model loading and inference callables behind the three capabilities.

Each loader turns a ``family:name`` identifier into a plain callable so the
route handlers stay model-agnostic.  The ``builtin`` family needs no third
party packages: ``hashed-tf`` embeddings, ``rules`` entailment, and ``echo``
generation are deterministic reference models used for contract tests and
smoke deployments.  The ``hf`` family loads Hugging Face checkpoints once at
startup; nothing is downloaded at request time.
"""

from __future__ import annotations

import hashlib
import logging
import unicodedata
from typing import Callable

logger = logging.getLogger(__name__)

LABELS = ("entail", "contradict", "neutral")

EMBED_DIM = 256

_LABEL_ALIASES = {
    "entail": "entail",
    "entails": "entail",
    "entailment": "entail",
    "contradict": "contradict",
    "contradiction": "contradict",
    "contradictory": "contradict",
    "neutral": "neutral",
}


class ModelLoadError(RuntimeError):
    """A configured model identifier could not be turned into a callable."""


class InferenceError(RuntimeError):
    """A loaded model produced an unusable result."""


def normalize_label(raw: str) -> str:
    """Map a checkpoint's native label to the three-way vocabulary."""
    key = raw.strip().casefold()
    try:
        return _LABEL_ALIASES[key]
    except KeyError:
        raise InferenceError(f"unknown entailment label {raw!r}") from None


# ---------------------------------------------------------------------------
# builtin models

def _content_tokens(text: str) -> list[str]:
    """Casefolded whitespace tokens with Unicode punctuation stripped."""
    tokens = []
    for surface in text.split():
        folded = surface.casefold()
        normalized = "".join(
            ch for ch in folded if not unicodedata.category(ch).startswith("P")
        )
        if normalized:
            tokens.append(normalized)
    return tokens


def hashed_tf_vector(text: str, dim: int = EMBED_DIM) -> list[float]:
    """Hash-bucketed term-frequency embedding.

    Buckets come from the first four bytes of each token's SHA-256 digest,
    so the vector for a given text is identical on every platform and on
    every call — the wire-contract determinism the client relies on.
    """
    vector = [0.0] * dim
    for token in _content_tokens(text):
        bucket = int.from_bytes(
            hashlib.sha256(token.encode("utf-8")).digest()[:4], "big"
        ) % dim
        vector[bucket] += 1.0
    return vector


def _rule_nli(premise: str, hypothesis: str) -> str:
    if premise.strip() == hypothesis.strip():
        return "entail"
    return "neutral"


# ---------------------------------------------------------------------------
# hf models (loaded lazily so the builtin path has no heavy imports)

def _load_hf_embedder(checkpoint: str, device: str) -> Callable[[str], list[float]]:
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelLoadError(
            f"hf:{checkpoint} needs the sentence-transformers package: {exc}"
        ) from exc
    try:
        model = SentenceTransformer(checkpoint, device=device)
    except Exception as exc:
        raise ModelLoadError(f"cannot load hf:{checkpoint}: {exc}") from exc

    def embed(text: str) -> list[float]:
        return [float(x) for x in model.encode(text, convert_to_numpy=True)]

    return embed


def _load_hf_nli(checkpoint: str, device: str) -> Callable[[str, str], str]:
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise ModelLoadError(
            f"hf:{checkpoint} needs the transformers package: {exc}"
        ) from exc
    try:
        classify = pipeline("text-classification", model=checkpoint, device=device)
    except Exception as exc:
        raise ModelLoadError(f"cannot load hf:{checkpoint}: {exc}") from exc

    def nli(premise: str, hypothesis: str) -> str:
        results = classify({"text": premise, "text_pair": hypothesis}, top_k=1)
        if isinstance(results, list):
            if not results:
                raise InferenceError(f"hf:{checkpoint} returned no label")
            results = results[0]
        return normalize_label(str(results["label"]))

    return nli


def _load_hf_generator(checkpoint: str, device: str) -> Callable[[str], str]:
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise ModelLoadError(
            f"hf:{checkpoint} needs the transformers package: {exc}"
        ) from exc
    try:
        generate = pipeline("text-generation", model=checkpoint, device=device)
    except Exception as exc:
        raise ModelLoadError(f"cannot load hf:{checkpoint}: {exc}") from exc

    def complete(prompt: str) -> str:
        results = generate(prompt, return_full_text=False)
        if not results:
            raise InferenceError(f"hf:{checkpoint} returned no completion")
        return str(results[0]["generated_text"])

    return complete


# ---------------------------------------------------------------------------
# loader registry

def _split_spec(spec: str, capability: str) -> tuple[str, str]:
    family, _, name = spec.partition(":")
    if not family or not name:
        raise ModelLoadError(
            f"{capability} model {spec!r} is not of the form 'family:name'"
        )
    return family, name


def load_embedder(spec: str, *, device: str = "cpu") -> Callable[[str], list[float]]:
    family, name = _split_spec(spec, "embed")
    if family == "builtin":
        if name != "hashed-tf":
            raise ModelLoadError(f"unknown builtin embedder {name!r}")
        return hashed_tf_vector
    if family == "hf":
        return _load_hf_embedder(name, device)
    raise ModelLoadError(f"unknown embed model family {family!r}")


def load_nli(spec: str, *, device: str = "cpu") -> Callable[[str, str], str]:
    family, name = _split_spec(spec, "nli")
    if family == "builtin":
        if name != "rules":
            raise ModelLoadError(f"unknown builtin entailment model {name!r}")
        return _rule_nli
    if family == "hf":
        return _load_hf_nli(name, device)
    raise ModelLoadError(f"unknown nli model family {family!r}")


def load_generator(spec: str, *, device: str = "cpu") -> Callable[[str], str]:
    family, name = _split_spec(spec, "generate")
    if family == "builtin":
        if name != "echo":
            raise ModelLoadError(f"unknown builtin generator {name!r}")
        return lambda prompt: prompt
    if family == "hf":
        return _load_hf_generator(name, device)
    raise ModelLoadError(f"unknown generate model family {family!r}")
