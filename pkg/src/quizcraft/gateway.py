"""Deadline-bounded fan-out to question generation backends.

Backends speak one wire protocol: HTTP POST /generate with a JSON body
{"context", "answer", "max_new_tokens", "request_id"} answered by
{"question", "model_id"}.  The canonical encoding is UTF-8 JSON with keys
in exactly that order, compact separators and ensure_ascii off;
PROTOCOL_TEST_VECTORS pins it byte for byte so independent
implementations can check conformance.

Endpoints with a mock:// scheme resolve to deterministic in-process
backends, which keeps tests and demo configs free of real model servers:

    mock://template                        "What is the significance of {answer}?"
    mock://template?delay_ms=300           same, after an artificial delay
    mock://fixed?text=...                  constant question text
    mock://canned?<answer>=<question>&...  per-answer table, template fallback
    mock://fail?message=...                always a Failure result

All failures are encoded in the returned results; fan_out never raises
for a slow or broken backend and a late response is discarded, not
retried.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass
from enum import Enum
from threading import Lock
from typing import Sequence
from urllib.parse import parse_qsl, urlsplit

import httpx

from .domain import ModelDescriptor

DEFAULT_DEADLINE_MS = 200
DEFAULT_OVERHEAD_MS = 50
DEFAULT_MAX_NEW_TOKENS = 30

MOCK_TEMPLATE = "What is the significance of {answer}?"


@dataclass(frozen=True)
class GenerationRequest:
    context: str
    answer: str
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    request_id: str = ""

    def __post_init__(self) -> None:
        if not self.context:
            raise ValueError("context must be non-empty")
        if not self.answer:
            raise ValueError("answer must be non-empty")
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")


class Outcome(Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    FAILURE = "failure"


@dataclass(frozen=True)
class GenerationResult:
    model_id: str
    outcome: Outcome
    latency_ms: int
    question: str | None = None
    message: str | None = None

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        if self.outcome is Outcome.OK and not self.question:
            raise ValueError("an ok result requires a non-empty question")

    def is_ok(self) -> bool:
        return self.outcome is Outcome.OK


# -- wire protocol codec ----------------------------------------------------


def encode_request(req: GenerationRequest) -> bytes:
    payload = {
        "context": req.context,
        "answer": req.answer,
        "max_new_tokens": req.max_new_tokens,
        "request_id": req.request_id,
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_request(raw: bytes) -> GenerationRequest:
    """Parse a request body; raises ValueError on any schema violation."""
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"unparsable request body: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("request body must be a JSON object")
    for key in ("context", "answer"):
        if not isinstance(obj.get(key), str):
            raise ValueError(f"request field {key!r} must be a string")
    tokens = obj.get("max_new_tokens", DEFAULT_MAX_NEW_TOKENS)
    if not isinstance(tokens, int) or isinstance(tokens, bool):
        raise ValueError("request field 'max_new_tokens' must be an integer")
    request_id = obj.get("request_id", "")
    if not isinstance(request_id, str):
        raise ValueError("request field 'request_id' must be a string")
    return GenerationRequest(
        context=obj["context"],
        answer=obj["answer"],
        max_new_tokens=tokens,
        request_id=request_id,
    )


def encode_response(question: str, model_id: str) -> bytes:
    payload = {"question": question, "model_id": model_id}
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_response(raw: bytes) -> tuple[str, str]:
    """Parse a response body into (question, model_id); ValueError on
    anything malformed."""
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"unparsable response body: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("response body must be a JSON object")
    question = obj.get("question")
    model_id = obj.get("model_id")
    if not isinstance(question, str) or not question:
        raise ValueError("response field 'question' must be a non-empty string")
    if not isinstance(model_id, str) or not model_id:
        raise ValueError("response field 'model_id' must be a non-empty string")
    return question, model_id


PROTOCOL_TEST_VECTORS = [
    {
        "request": {
            "context": "The Statue of Liberty is a colossal neoclassical sculpture.",
            "answer": "Statue of Liberty",
            "max_new_tokens": 30,
            "request_id": "req-1",
        },
        "request_bytes": (
            b'{"context":"The Statue of Liberty is a colossal neoclassical sculpture.",'
            b'"answer":"Statue of Liberty","max_new_tokens":30,"request_id":"req-1"}'
        ),
        "response": {
            "question": "Who designed the Statue of Liberty?",
            "model_id": "mixqg-large",
        },
        "response_bytes": (
            b'{"question":"Who designed the Statue of Liberty?","model_id":"mixqg-large"}'
        ),
    },
    {
        "request": {
            "context": "Le café au lait est une boisson chaude.",
            "answer": "café",
            "max_new_tokens": 16,
            "request_id": "αβ-2",
        },
        "request_bytes": (
            '{"context":"Le café au lait est une boisson chaude.",'
            '"answer":"café","max_new_tokens":16,"request_id":"αβ-2"}'
        ).encode("utf-8"),
        "response": {
            "question": "Quelle boisson contient du café?",
            "model_id": "m2",
        },
        "response_bytes": (
            '{"question":"Quelle boisson contient du café?","model_id":"m2"}'
        ).encode("utf-8"),
    },
    {
        "request": {
            "context": 'He said "run"\nand left.',
            "answer": "run",
            "max_new_tokens": 30,
            "request_id": "q/3",
        },
        "request_bytes": (
            b'{"context":"He said \\"run\\"\\nand left.",'
            b'"answer":"run","max_new_tokens":30,"request_id":"q/3"}'
        ),
        "response": {
            "question": 'What did he say before "and left"?',
            "model_id": "m\\3",
        },
        "response_bytes": (
            b'{"question":"What did he say before \\"and left\\"?","model_id":"m\\\\3"}'
        ),
    },
]


# -- mock backends ----------------------------------------------------------


@dataclass(frozen=True)
class MockBehavior:
    kind: str  # template | fixed | canned | fail
    delay_ms: int = 0
    text: str = ""
    message: str = "mock failure"
    canned: tuple[tuple[str, str], ...] = ()


def parse_mock_endpoint(endpoint: str) -> MockBehavior:
    """Read a mock:// endpoint URI into a behavior.  Query parameter names
    delay_ms/text/message are reserved; for canned backends every other
    parameter is an answer -> question entry."""
    parts = urlsplit(endpoint)
    if parts.scheme != "mock":
        raise ValueError(f"not a mock endpoint: {endpoint!r}")
    kind = parts.netloc or "template"
    if kind not in ("template", "fixed", "canned", "fail"):
        raise ValueError(f"unknown mock behavior {kind!r}")
    delay_ms = 0
    text = ""
    message = "mock failure"
    canned: list[tuple[str, str]] = []
    for key, value in parse_qsl(parts.query, keep_blank_values=True):
        if key == "delay_ms":
            delay_ms = int(value)
        elif key == "text":
            text = value
        elif key == "message":
            message = value
        else:
            canned.append((key, value))
    return MockBehavior(kind=kind, delay_ms=delay_ms, text=text, message=message, canned=tuple(canned))


def mock_answer(behavior: MockBehavior, req: GenerationRequest) -> tuple[str | None, str | None]:
    """(question, failure_message) for a mock behavior; exactly one is set."""
    if behavior.kind == "fail":
        return None, behavior.message
    if behavior.kind == "fixed":
        if not behavior.text:
            return None, "fixed mock configured with empty text"
        return behavior.text, None
    if behavior.kind == "canned":
        table = dict(behavior.canned)
        if req.answer in table:
            return table[req.answer], None
    return MOCK_TEMPLATE.format(answer=req.answer), None


# -- transport --------------------------------------------------------------

_client_lock = Lock()
_client: httpx.Client | None = None


def _http_client() -> httpx.Client:
    global _client
    with _client_lock:
        if _client is None:
            _client = httpx.Client(
                limits=httpx.Limits(max_connections=64, max_keepalive_connections=32)
            )
        return _client


def generate(backend: ModelDescriptor, req: GenerationRequest, deadline_ms: int = DEFAULT_DEADLINE_MS) -> GenerationResult:
    """Issue one generation call; never raises.  Slow answers become
    Timeout results (latency pinned at the deadline), malformed or non-200
    answers become Failure results."""
    if deadline_ms <= 0:
        raise ValueError("deadline_ms must be positive")
    if backend.endpoint.startswith("mock:"):
        return _generate_mock(backend, req, deadline_ms)
    return _generate_http(backend, req, deadline_ms)


def _generate_mock(backend: ModelDescriptor, req: GenerationRequest, deadline_ms: int) -> GenerationResult:
    try:
        behavior = parse_mock_endpoint(backend.endpoint)
    except ValueError as exc:
        return GenerationResult(backend.model_id, Outcome.FAILURE, 0, message=str(exc))
    if behavior.delay_ms > deadline_ms:
        time.sleep(deadline_ms / 1000.0)
        return GenerationResult(backend.model_id, Outcome.TIMEOUT, deadline_ms)
    if behavior.delay_ms:
        time.sleep(behavior.delay_ms / 1000.0)
    question, message = mock_answer(behavior, req)
    # declared delay doubles as the reported latency so mock runs are
    # reproducible bit for bit
    if message is not None:
        return GenerationResult(backend.model_id, Outcome.FAILURE, behavior.delay_ms, message=message)
    return GenerationResult(backend.model_id, Outcome.OK, behavior.delay_ms, question=question)


def _generate_http(backend: ModelDescriptor, req: GenerationRequest, deadline_ms: int) -> GenerationResult:
    started = time.perf_counter()

    def elapsed_ms() -> int:
        return max(0, round((time.perf_counter() - started) * 1000))

    try:
        response = _http_client().post(
            backend.endpoint,
            content=encode_request(req),
            headers={"content-type": "application/json"},
            timeout=deadline_ms / 1000.0,
        )
    except httpx.TimeoutException:
        return GenerationResult(backend.model_id, Outcome.TIMEOUT, deadline_ms)
    except httpx.HTTPError as exc:
        return GenerationResult(
            backend.model_id, Outcome.FAILURE, min(elapsed_ms(), deadline_ms), message=str(exc)
        )
    latency = min(elapsed_ms(), deadline_ms)
    if response.status_code != 200:
        return GenerationResult(
            backend.model_id, Outcome.FAILURE, latency, message=f"http status {response.status_code}"
        )
    try:
        question, _reported_id = decode_response(response.content)
    except ValueError as exc:
        return GenerationResult(backend.model_id, Outcome.FAILURE, latency, message=str(exc))
    return GenerationResult(backend.model_id, Outcome.OK, latency, question=question)


def fan_out(
    backends: Sequence[ModelDescriptor],
    req: GenerationRequest,
    deadline_ms: int = DEFAULT_DEADLINE_MS,
    overhead_ms: int = DEFAULT_OVERHEAD_MS,
) -> list[GenerationResult]:
    """Query every backend concurrently and return one result per backend
    in configuration order.  Wall time stays within deadline_ms plus the
    overhead allowance; stragglers are reported as Timeout and abandoned.
    """
    if not backends:
        raise ValueError("fan_out requires at least one backend")
    executor = ThreadPoolExecutor(max_workers=len(backends))
    try:
        futures = [executor.submit(generate, b, req, deadline_ms) for b in backends]
        wait(futures, timeout=(deadline_ms + overhead_ms / 2.0) / 1000.0)
        results: list[GenerationResult] = []
        for backend, future in zip(backends, futures):
            if future.done() and future.exception() is None:
                results.append(future.result())
            else:
                results.append(GenerationResult(backend.model_id, Outcome.TIMEOUT, deadline_ms))
        return results
    finally:
        executor.shutdown(wait=False, cancel_futures=True)
