"""Server configuration: one optional model identifier per capability.

A capability whose model is ``None`` is unconfigured; its route answers 501.
Model identifiers use a ``family:name`` form — ``builtin:hashed-tf``,
``builtin:rules``, ``builtin:echo``, or ``hf:<checkpoint>`` for Hugging Face
models loaded at startup.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

logger = logging.getLogger(__name__)

CAPABILITIES = ("embed", "generate", "nli")

ENV_PREFIX = "IMITEXT_SERVER_"


class ServerConfigError(ValueError):
    """Raised for an invalid server configuration."""


@dataclass(frozen=True)
class ServerConfig:
    embed_model: str | None = None
    nli_model: str | None = None
    generate_model: str | None = None
    port: int = 8731
    max_batch: int = 8
    device: str = "cpu"

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ServerConfigError(f"port must be in [1, 65535], got {self.port}")
        if self.max_batch < 1:
            raise ServerConfigError(
                f"max_batch must be a positive integer, got {self.max_batch}"
            )
        if not self.device or not self.device.strip():
            raise ServerConfigError("device hint must be a non-empty string")
        for name, spec in self.models().items():
            if spec is not None and (not isinstance(spec, str) or not spec.strip()):
                raise ServerConfigError(f"{name} model identifier must be non-empty")

    def models(self) -> dict[str, str | None]:
        return {
            "embed": self.embed_model,
            "generate": self.generate_model,
            "nli": self.nli_model,
        }

    def capabilities(self) -> list[str]:
        """Configured capability names, sorted for a stable /health echo."""
        return sorted(name for name, spec in self.models().items() if spec)

    @classmethod
    def from_env(cls, environ: Mapping[str, str], **overrides) -> "ServerConfig":
        """Build a config from ``IMITEXT_SERVER_*`` variables; keyword
        overrides (typically parsed flags) win over the environment."""

        def env(name: str) -> str | None:
            value = environ.get(ENV_PREFIX + name)
            return value if value else None

        values: dict[str, object] = {
            "embed_model": env("EMBED_MODEL"),
            "nli_model": env("NLI_MODEL"),
            "generate_model": env("GENERATE_MODEL"),
            "device": env("DEVICE") or cls.device,
        }
        for field, name in (("port", "PORT"), ("max_batch", "MAX_BATCH")):
            raw = env(name)
            if raw is not None:
                try:
                    values[field] = int(raw)
                except ValueError as exc:
                    raise ServerConfigError(
                        f"{ENV_PREFIX}{name} must be an integer, got {raw!r}"
                    ) from exc
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)  # type: ignore[arg-type]
