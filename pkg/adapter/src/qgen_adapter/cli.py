"""Command line entry point for serving one model instance."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .config import (
    DEFAULT_BEAM_SIZE,
    DEFAULT_MAX_NEW_TOKENS,
    DEFAULT_PROMPT_TEMPLATE,
    DEFAULT_QUESTION_TEMPLATE,
    AdapterConfig,
    ConfigError,
    split_listen_address,
)
from .service import create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgen-adapter",
        description="Serve a question generation model over POST /generate and GET /info",
    )
    parser.add_argument("--model-id", required=True, help="identifier echoed in every response")
    parser.add_argument(
        "--engine",
        choices=("template", "hf"),
        default="template",
        help="'template' answers from a fixed pattern; 'hf' serves a checkpoint",
    )
    parser.add_argument("--checkpoint", default="", help="checkpoint name for the hf engine")
    parser.add_argument(
        "--prompt-template",
        default=DEFAULT_PROMPT_TEMPLATE,
        help="how {answer} and {context} are arranged in the model input",
    )
    parser.add_argument(
        "--question-template",
        default=DEFAULT_QUESTION_TEMPLATE,
        help="output pattern for the template engine, with an {answer} placeholder",
    )
    parser.add_argument("--beam-size", type=int, default=DEFAULT_BEAM_SIZE)
    parser.add_argument("--max-new-tokens", type=int, default=DEFAULT_MAX_NEW_TOKENS)
    parser.add_argument("--listen", default="127.0.0.1:8100", help="host:port to bind")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            model_id=args.model_id,
            checkpoint=args.checkpoint,
            engine=args.engine,
            prompt_template=args.prompt_template,
            question_template=args.question_template,
            beam_size=args.beam_size,
            max_new_tokens=args.max_new_tokens,
            listen_address=args.listen,
        )
        host, port = split_listen_address(config.listen_address)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
