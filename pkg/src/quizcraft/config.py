"""Configuration loading for the serve and analyze entry points.

Config files are YAML or JSON (by extension).  Two environment
variables override file values so deployments can relocate the service
without editing files: QUIZCRAFT_LISTEN (listen address) and
QUIZCRAFT_STORE (annotation store path).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .domain import ModelDescriptor, Topic
from .errors import ConfigError

ENV_LISTEN = "QUIZCRAFT_LISTEN"
ENV_STORE = "QUIZCRAFT_STORE"

_KNOWN_KEYS = {
    "listen_address",
    "backends",
    "deadline_ms",
    "overhead_ms",
    "store_path",
    "material_dir",
    "embedding_endpoint",
    "max_new_tokens",
    "word_limit",
}


@dataclass(frozen=True)
class Config:
    listen_address: str = "127.0.0.1:8000"
    backends: tuple[ModelDescriptor, ...] = ()
    deadline_ms: int = 200
    overhead_ms: int = 50
    store_path: str = "annotations.jsonl"
    material_dir: str = "materials"
    embedding_endpoint: str | None = None
    max_new_tokens: int = 30
    word_limit: int = 500

    def __post_init__(self) -> None:
        if self.deadline_ms <= 0:
            raise ConfigError("deadline_ms must be positive")
        if self.overhead_ms < 0:
            raise ConfigError("overhead_ms must be non-negative")
        if self.word_limit <= 0:
            raise ConfigError("word_limit must be positive")
        seen = set()
        for backend in self.backends:
            if backend.model_id in seen:
                raise ConfigError(f"duplicate backend model_id {backend.model_id!r}")
            seen.add(backend.model_id)


def _parse_backend(raw: object, index: int) -> ModelDescriptor:
    if not isinstance(raw, dict):
        raise ConfigError(f"backends[{index}] must be a mapping")
    try:
        model_id = raw["model_id"]
        endpoint = raw["endpoint"]
    except KeyError as exc:
        raise ConfigError(f"backends[{index}] missing key {exc.args[0]!r}") from exc
    display_name = raw.get("display_name", model_id)
    if not isinstance(model_id, str) or not model_id:
        raise ConfigError(f"backends[{index}].model_id must be a non-empty string")
    if not isinstance(endpoint, str) or not endpoint:
        raise ConfigError(f"backends[{index}].endpoint must be a non-empty string")
    return ModelDescriptor(model_id=model_id, endpoint=endpoint, display_name=str(display_name))


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        raw_text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(raw_text)
        else:
            data = yaml.safe_load(raw_text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    backends_raw = data.get("backends", [])
    if not isinstance(backends_raw, list):
        raise ConfigError("backends must be a list")
    backends = tuple(_parse_backend(b, i) for i, b in enumerate(backends_raw))

    kwargs: dict = {"backends": backends}
    for key in ("listen_address", "store_path", "material_dir", "embedding_endpoint"):
        if key in data:
            kwargs[key] = data[key]
    for key in ("deadline_ms", "overhead_ms", "max_new_tokens", "word_limit"):
        if key in data:
            value = data[key]
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{key} must be an integer")
            kwargs[key] = value
    config = Config(**kwargs)
    return apply_env_overrides(config)


def apply_env_overrides(config: Config, env: dict[str, str] | None = None) -> Config:
    env = os.environ if env is None else env
    updates: dict = {}
    if env.get(ENV_LISTEN):
        updates["listen_address"] = env[ENV_LISTEN]
    if env.get(ENV_STORE):
        updates["store_path"] = env[ENV_STORE]
    return replace(config, **updates) if updates else config


def split_listen_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"listen_address {address!r} must look like host:port")
    return host, int(port)


# -- topic/material directory -----------------------------------------------

TOPICS_FILE = "topics.json"


def load_topics(material_dir: str | Path) -> list[tuple[Topic, str]]:
    """Read the topic index and each topic's raw text from a directory.

    The index is topics.json: a list of {id, title, source_uri, file}
    with file paths relative to the directory.
    """
    directory = Path(material_dir)
    index_path = directory / TOPICS_FILE
    if not index_path.exists():
        return []
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {index_path}: {exc}") from exc
    if not isinstance(index, list):
        raise ConfigError(f"{index_path} must contain a list")
    out: list[tuple[Topic, str]] = []
    for i, item in enumerate(index):
        if not isinstance(item, dict):
            raise ConfigError(f"{TOPICS_FILE}[{i}] must be a mapping")
        try:
            topic = Topic(id=item["id"], title=item["title"], source_uri=item.get("source_uri", ""))
            file_name = item["file"]
        except KeyError as exc:
            raise ConfigError(f"{TOPICS_FILE}[{i}] missing key {exc.args[0]!r}") from exc
        try:
            text = (directory / file_name).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read material for topic {topic.id!r}: {exc}") from exc
        out.append((topic, text))
    return out


def register_topic(material_dir: str | Path, topic: Topic, text: str) -> Path:
    """Write a topic's raw text into the material directory and upsert
    its entry in topics.json; returns the text file path."""
    directory = Path(material_dir)
    directory.mkdir(parents=True, exist_ok=True)
    index_path = directory / TOPICS_FILE
    index: list[dict] = []
    if index_path.exists():
        try:
            index = json.loads(index_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {index_path}: {exc}") from exc
    file_name = f"{topic.id}.txt"
    (directory / file_name).write_text(text, encoding="utf-8")
    entry = {"id": topic.id, "title": topic.title, "source_uri": topic.source_uri, "file": file_name}
    index = [e for e in index if e.get("id") != topic.id] + [entry]
    index_path.write_text(json.dumps(index, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return directory / file_name
