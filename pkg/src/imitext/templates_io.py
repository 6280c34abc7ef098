"""Loading and rendering of the external prompt templates.

Templates are plain text files with ``{name}`` placeholders, one file per
pipeline component; the packaged set can be overridden with a directory of
files carrying the same names.
"""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path

from .core import ConfigError

TEMPLATE_NAMES = (
    "clarify",
    "outline",
    "qa",
    "write_draft",
    "write_revise",
    "summarize",
    "judge_imitativeness",
    "judge_adaptiveness",
    "baseline_llm",
    "baseline_rom",
    "baseline_sr_init",
    "baseline_sr_feedback",
    "baseline_sr_refine",
)


class TemplateSet:
    def __init__(self, texts: dict[str, str]):
        missing = [name for name in TEMPLATE_NAMES if name not in texts]
        if missing:
            raise ConfigError(f"missing prompt templates: {missing}")
        self._texts = dict(texts)

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "TemplateSet":
        """Load templates from ``directory``, or the packaged defaults."""
        texts: dict[str, str] = {}
        if directory is None:
            root = resources.files("imitext").joinpath("templates")
            for name in TEMPLATE_NAMES:
                texts[name] = root.joinpath(f"{name}.tmpl").read_text("utf-8")
        else:
            root_path = Path(directory)
            for name in TEMPLATE_NAMES:
                file_path = root_path / f"{name}.tmpl"
                if not file_path.is_file():
                    raise ConfigError(f"template file not found: {file_path}")
                texts[name] = file_path.read_text("utf-8")
        return cls(texts)

    def render(self, name: str, **fields: str) -> str:
        if name not in self._texts:
            raise ConfigError(f"unknown template: {name!r}")
        try:
            return self._texts[name].format(**fields)
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"template {name!r} is missing a value for {exc}") from exc

    def fingerprint(self) -> str:
        """Content hash identifying the template set in run manifests."""
        digest = hashlib.sha256()
        for name in TEMPLATE_NAMES:
            digest.update(name.encode("utf-8"))
            digest.update(b"\x00")
            digest.update(self._texts[name].encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()
