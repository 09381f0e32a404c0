"""Adapter configuration: which checkpoint to serve and how to decode.

Answer-aware checkpoints differ in how (answer, context) must be
arranged in the model input, so the prompt template is configuration
rather than code.  The default works as a neutral starting point;
override it per model family with --prompt-template.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_BEAM_SIZE = 2
DEFAULT_MAX_NEW_TOKENS = 30
DEFAULT_PROMPT_TEMPLATE = "answer: {answer}  context: {context}"
DEFAULT_QUESTION_TEMPLATE = "What is the significance of {answer}?"


class ConfigError(ValueError):
    """Adapter configuration is incomplete or out of range."""


@dataclass(frozen=True)
class AdapterConfig:
    model_id: str
    checkpoint: str = ""
    engine: str = "template"
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    question_template: str = DEFAULT_QUESTION_TEMPLATE
    beam_size: int = DEFAULT_BEAM_SIZE
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    listen_address: str = "127.0.0.1:8100"

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ConfigError("model_id must be non-empty")
        if self.beam_size < 1:
            raise ConfigError("beam_size must be at least 1")
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be at least 1")
        if self.engine not in ("template", "hf"):
            raise ConfigError(f"unknown engine {self.engine!r} (expected 'template' or 'hf')")
        if self.engine == "hf" and not self.checkpoint:
            raise ConfigError("engine 'hf' requires a checkpoint name")


def split_listen_address(listen_address: str) -> tuple[str, int]:
    host, sep, port = listen_address.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen_address {listen_address!r} must look like host:port")
    try:
        return host, int(port)
    except ValueError as exc:
        raise ConfigError(f"listen_address port {port!r} is not an integer") from exc
