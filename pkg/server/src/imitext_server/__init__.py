"""HTTP model server for the imitext backend wire contract."""

from .app import create_app
from .config import ServerConfig, ServerConfigError
from .models import (
    InferenceError,
    LABELS,
    ModelLoadError,
    load_embedder,
    load_generator,
    load_nli,
    normalize_label,
)

__version__ = "0.1.0"

__all__ = [
    "create_app",
    "ServerConfig",
    "ServerConfigError",
    "InferenceError",
    "ModelLoadError",
    "LABELS",
    "load_embedder",
    "load_generator",
    "load_nli",
    "normalize_label",
    "__version__",
]
