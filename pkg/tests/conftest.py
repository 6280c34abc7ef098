"""Shared fixtures: template set, offline backends, canned transports, corpora."""
from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from imitext.adapter import KnowledgeStore
from imitext.backends import Backend, make_backend
from imitext.core import PipelineConfig, TaskInstance, load_tasks
from imitext.templates_io import TemplateSet

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"
DATA_DIR = TESTS_DIR.parent / "data"

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


class CannedTransport:
    """Transport whose replies are a fixed string or a function of the request.

    Keeps every request it sees so tests can assert on rendered payloads.
    """

    name = "canned"

    def __init__(self, reply):
        self._reply = reply if callable(reply) else (lambda request: reply)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self._reply(request)


def canned_backend(reply) -> Backend:
    return Backend(transport=CannedTransport(reply), profile_name="canned")


@pytest.fixture(scope="session")
def templates() -> TemplateSet:
    return TemplateSet.load()


@pytest.fixture()
def mock_backend() -> Backend:
    return make_backend("mock")


@pytest.fixture()
def offline_backend() -> Backend:
    return make_backend("offline")


@pytest.fixture(scope="session")
def retrieval_store() -> KnowledgeStore:
    return KnowledgeStore.from_jsonl(FIXTURES / "retrieval_store.jsonl")


@pytest.fixture(scope="session")
def demo_tasks() -> list[TaskInstance]:
    return load_tasks(DATA_DIR / "demo_tasks.jsonl")


@pytest.fixture()
def district_task() -> TaskInstance:
    return TaskInstance(
        id="district-3seg",
        source_topic="Belebeyevsky District",
        target_topic="Davlekanovsky District",
        source_text=(
            "Belebeyevsky District is an administrative district of Bashkortostan. "
            "It is located in the west. "
            "The population of Belebeyevsky District was 41361."
        ),
        gold_text=(
            "Davlekanovsky District is an administrative district of Bashkortostan. "
            "Its administrative center is the town of Davlekanovo. "
            "The population was 41361."
        ),
    )


@pytest.fixture()
def default_config() -> PipelineConfig:
    return PipelineConfig()


@pytest.fixture(scope="session")
def metric_pairs() -> list[dict]:
    rows = []
    with open(FIXTURES / "metric_pairs.jsonl", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows
