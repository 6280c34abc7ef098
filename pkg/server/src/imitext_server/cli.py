"""Command-line entry point: parse flags, build the app, run uvicorn.

Every flag falls back to an ``IMITEXT_SERVER_*`` environment variable, so a
deployment can configure the process entirely through its environment.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

from .app import create_app
from .config import ServerConfig, ServerConfigError
from .models import ModelLoadError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imitext-server",
        description=(
            "Serve embedding, entailment, and generation models over the "
            "JSON HTTP contract used by the imitext http backend profile."
        ),
    )
    parser.add_argument("--host", default="127.0.0.1",
                        help="bind address (default: 127.0.0.1)")
    parser.add_argument("--port", type=int, default=None,
                        help="listen port (default: 8731 or IMITEXT_SERVER_PORT)")
    parser.add_argument("--embed-model", default=None,
                        help="embedding model, e.g. builtin:hashed-tf or hf:<checkpoint>")
    parser.add_argument("--nli-model", default=None,
                        help="entailment model, e.g. builtin:rules or hf:<checkpoint>")
    parser.add_argument("--generate-model", default=None,
                        help="generation model, e.g. builtin:echo or hf:<checkpoint>")
    parser.add_argument("--max-batch", type=int, default=None,
                        help="internal batching cap (default: 8)")
    parser.add_argument("--device", default=None,
                        help="device hint passed to model loaders (default: cpu)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def config_from_args(args: argparse.Namespace) -> ServerConfig:
    return ServerConfig.from_env(
        os.environ,
        embed_model=args.embed_model,
        nli_model=args.nli_model,
        generate_model=args.generate_model,
        port=args.port,
        max_batch=args.max_batch,
        device=args.device,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
        app = create_app(config)
    except (ServerConfigError, ModelLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not config.capabilities():
        logger.warning("no models configured; every model route will answer 501")

    import uvicorn

    logger.info(
        "serving %s on %s:%d", config.capabilities() or "nothing",
        args.host, config.port,
    )
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
