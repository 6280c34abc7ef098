"""Topic-adaptive article rewriting with a recurrent plan-then-adapt pipeline.

The package covers the full loop: segmenting a source article, planning and
adapting each segment against retrieved knowledge with calibrated question
answering, generating with memory-aware revision, and scoring the results
with reference, factuality, and judge-based metrics.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .adapter import (
    AdaptedFact,
    Adapter,
    KnowledgeDoc,
    KnowledgeSnippet,
    KnowledgeStore,
    LongTermMemory,
)
from .backends import (
    Backend,
    BackendError,
    BackendRequest,
    Capability,
    Cassette,
    ComponentTag,
    ReplayMiss,
    make_backend,
)
from .core import (
    Ablation,
    GenerationResult,
    ImitextError,
    PipelineConfig,
    Strategy,
    TaskInstance,
    ValidationError,
    load_tasks,
    validate_instance,
)
from .datasets import CorpusRecord, PairingPolicy, load_corpus, pair_topics
from .pipeline import StepFailure, StepTrace, run, run_baseline, run_repa
from .planner import Planner, Question, ShortTermMemory, substitute_topic
from .segmentation import split_sentences, tokenize
from .templates_io import TemplateSet

__all__ = [
    "__version__",
    "Ablation",
    "AdaptedFact",
    "Adapter",
    "Backend",
    "BackendError",
    "BackendRequest",
    "Capability",
    "Cassette",
    "ComponentTag",
    "CorpusRecord",
    "GenerationResult",
    "ImitextError",
    "KnowledgeDoc",
    "KnowledgeSnippet",
    "KnowledgeStore",
    "LongTermMemory",
    "PairingPolicy",
    "PipelineConfig",
    "Planner",
    "Question",
    "ReplayMiss",
    "ShortTermMemory",
    "StepFailure",
    "StepTrace",
    "Strategy",
    "TaskInstance",
    "TemplateSet",
    "ValidationError",
    "load_corpus",
    "load_tasks",
    "make_backend",
    "pair_topics",
    "run",
    "run_baseline",
    "run_repa",
    "split_sentences",
    "substitute_topic",
    "tokenize",
    "validate_instance",
]
