"""Wire codec for the generation service.

A request is a single JSON object:

    {"context": "...", "answer": "...", "max_new_tokens": 30, "request_id": "r-1"}

and a response is:

    {"question": "...", "model_id": "..."}

Both directions use compact separators, the key order shown above, and
raw UTF-8 with no ASCII escaping, so equal payloads are equal byte
strings.  Callers may omit "max_new_tokens" and "request_id"; the
service substitutes its configured token budget and an empty id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class ProtocolError(ValueError):
    """Request or response body violates the wire schema."""


@dataclass(frozen=True)
class GenerateRequest:
    context: str
    answer: str
    max_new_tokens: int
    request_id: str


def _dump(payload: dict) -> bytes:
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_request(raw: bytes, default_max_new_tokens: int = 30) -> GenerateRequest:
    """Parse a request body; raises ProtocolError on any schema violation."""
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"unparsable request body: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("request body must be a JSON object")
    context = obj.get("context")
    answer = obj.get("answer")
    if not isinstance(context, str):
        raise ProtocolError("request field 'context' must be a string")
    if not isinstance(answer, str):
        raise ProtocolError("request field 'answer' must be a string")
    tokens = obj.get("max_new_tokens", default_max_new_tokens)
    if not isinstance(tokens, int) or isinstance(tokens, bool):
        raise ProtocolError("request field 'max_new_tokens' must be an integer")
    if tokens < 1:
        raise ProtocolError("request field 'max_new_tokens' must be at least 1")
    request_id = obj.get("request_id", "")
    if not isinstance(request_id, str):
        raise ProtocolError("request field 'request_id' must be a string")
    return GenerateRequest(
        context=context,
        answer=answer,
        max_new_tokens=tokens,
        request_id=request_id,
    )


def encode_request(req: GenerateRequest) -> bytes:
    """Inverse of decode_request, for client scripts and tests."""
    return _dump(
        {
            "context": req.context,
            "answer": req.answer,
            "max_new_tokens": req.max_new_tokens,
            "request_id": req.request_id,
        }
    )


def encode_response(question: str, model_id: str) -> bytes:
    if not question:
        raise ProtocolError("response field 'question' must be non-empty")
    if not model_id:
        raise ProtocolError("response field 'model_id' must be non-empty")
    return _dump({"question": question, "model_id": model_id})
