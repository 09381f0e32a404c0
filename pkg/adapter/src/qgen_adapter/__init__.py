"""Serves answer-aware question generation models behind the gateway wire protocol."""

from .config import (
    DEFAULT_BEAM_SIZE,
    DEFAULT_MAX_NEW_TOKENS,
    AdapterConfig,
    ConfigError,
)
from .engines import HFEngine, QuestionEngine, TemplateEngine, build_engine
from .protocol import (
    GenerateRequest,
    ProtocolError,
    decode_request,
    encode_request,
    encode_response,
)
from .service import create_app

__all__ = [
    "DEFAULT_BEAM_SIZE",
    "DEFAULT_MAX_NEW_TOKENS",
    "AdapterConfig",
    "ConfigError",
    "GenerateRequest",
    "HFEngine",
    "ProtocolError",
    "QuestionEngine",
    "TemplateEngine",
    "build_engine",
    "create_app",
    "decode_request",
    "encode_request",
    "encode_response",
]
