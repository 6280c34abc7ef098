from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from imitext_server import ServerConfig, create_app

CONTRACTS = Path(__file__).resolve().parents[2] / "contracts"

BUILTIN_CONFIG = ServerConfig(
    embed_model="builtin:hashed-tf",
    nli_model="builtin:rules",
    generate_model="builtin:echo",
)


def load_contract(name: str) -> dict:
    return json.loads((CONTRACTS / f"{name}.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def client() -> TestClient:
    """A client over the fully configured builtin-model server."""
    return TestClient(create_app(BUILTIN_CONFIG))
