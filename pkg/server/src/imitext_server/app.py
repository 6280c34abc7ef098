"""FastAPI application implementing the backend wire contract.

Routes and bodies::

    GET  /health                            -> {"status", "capabilities"}
    POST /embed    {"text": ...}            -> {"vector": [...]}
    POST /nli      {"premise", "hypothesis"}-> {"label": entail|contradict|neutral}
    POST /generate {"prompt": ...}          -> {"text": ...}

Errors are JSON ``{"error": message}``: 400 for a malformed body, 501 for an
unconfigured capability, 500 for a model failure.  Models load once in
``create_app``; request handlers never download anything.  Inference is
serialized behind a lock because most local checkpoints are not re-entrant;
the HTTP layer itself stays concurrent.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServerConfig
from .models import (
    InferenceError,
    LABELS,
    load_embedder,
    load_generator,
    load_nli,
)

logger = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    text: str


class NliRequest(BaseModel):
    premise: str
    hypothesis: str


class GenerateRequest(BaseModel):
    prompt: str


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app(
    config: ServerConfig | None = None,
    *,
    embedder: Callable[[str], list[float]] | None = None,
    nli: Callable[[str, str], str] | None = None,
    generator: Callable[[str], str] | None = None,
) -> FastAPI:
    """Build the application, loading any configured models up front.

    Explicitly passed callables take precedence over the config's model
    identifiers, which lets tests (and embedders) inject instrumented or
    failing models without touching the loader registry.
    """
    config = config or ServerConfig()
    if embedder is None and config.embed_model:
        embedder = load_embedder(config.embed_model, device=config.device)
    if nli is None and config.nli_model:
        nli = load_nli(config.nli_model, device=config.device)
    if generator is None and config.generate_model:
        generator = load_generator(config.generate_model, device=config.device)

    capabilities = sorted(
        name
        for name, model in (
            ("embed", embedder), ("generate", generator), ("nli", nli)
        )
        if model is not None
    )
    inference_lock = threading.Lock()

    app = FastAPI(title="imitext model server", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request body: {exc.errors()}")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "capabilities": capabilities}

    @app.post("/embed")
    def embed(body: EmbedRequest):
        if embedder is None:
            return _error(501, "embed capability is not configured")
        if not body.text.strip():
            return _error(400, "cannot embed empty text")
        try:
            with inference_lock:
                vector = embedder(body.text)
        except Exception as exc:
            logger.exception("embed model failure")
            return _error(500, f"embed model failure: {exc}")
        return {"vector": list(vector)}

    @app.post("/nli")
    def classify(body: NliRequest):
        if nli is None:
            return _error(501, "nli capability is not configured")
        if not body.premise.strip() or not body.hypothesis.strip():
            return _error(400, "premise and hypothesis must be non-empty")
        try:
            with inference_lock:
                label = nli(body.premise, body.hypothesis)
        except InferenceError as exc:
            return _error(500, str(exc))
        except Exception as exc:
            logger.exception("nli model failure")
            return _error(500, f"nli model failure: {exc}")
        if label not in LABELS:
            return _error(500, f"nli model produced unknown label {label!r}")
        return {"label": label}

    @app.post("/generate")
    def generate(body: GenerateRequest):
        if generator is None:
            return _error(501, "generate capability is not configured")
        if not body.prompt.strip():
            return _error(400, "cannot complete an empty prompt")
        try:
            with inference_lock:
                text = generator(body.prompt)
        except Exception as exc:
            logger.exception("generate model failure")
            return _error(500, f"generate model failure: {exc}")
        return {"text": text}

    return app
