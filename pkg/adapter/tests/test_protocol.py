"""Codec behaviour, including byte equality against the platform's
published wire vectors."""

import json

import pytest

from qgen_adapter.protocol import (
    GenerateRequest,
    ProtocolError,
    decode_request,
    encode_request,
    encode_response,
)
from quizcraft.gateway import PROTOCOL_TEST_VECTORS


def test_vector_requests_decode_to_published_fields():
    for vector in PROTOCOL_TEST_VECTORS:
        req = decode_request(vector["request_bytes"])
        assert req.context == vector["request"]["context"]
        assert req.answer == vector["request"]["answer"]
        assert req.max_new_tokens == vector["request"]["max_new_tokens"]
        assert req.request_id == vector["request"]["request_id"]


def test_vector_requests_reencode_byte_identically():
    for vector in PROTOCOL_TEST_VECTORS:
        req = decode_request(vector["request_bytes"])
        assert encode_request(req) == vector["request_bytes"]


def test_vector_responses_encode_byte_identically():
    for vector in PROTOCOL_TEST_VECTORS:
        resp = vector["response"]
        assert encode_response(resp["question"], resp["model_id"]) == vector["response_bytes"]


def test_round_trip_preserves_unicode_and_escapes():
    req = GenerateRequest(
        context='tab\there "quoted" back\\slash',
        answer="café αβ",
        max_new_tokens=5,
        request_id="req/α",
    )
    raw = encode_request(req)
    assert decode_request(raw) == req
    # non-ASCII stays raw on the wire instead of \u-escaped
    assert "café".encode("utf-8") in raw


def test_omitted_optional_fields_use_defaults():
    raw = json.dumps({"context": "c", "answer": "a"}).encode("utf-8")
    req = decode_request(raw, default_max_new_tokens=12)
    assert req.max_new_tokens == 12
    assert req.request_id == ""


@pytest.mark.parametrize(
    "raw",
    [
        b"not json at all",
        b'"a bare string"',
        b"[1,2,3]",
        json.dumps({"answer": "a"}).encode(),
        json.dumps({"context": "c"}).encode(),
        json.dumps({"context": "c", "answer": 3}).encode(),
        json.dumps({"context": None, "answer": "a"}).encode(),
        json.dumps({"context": "c", "answer": "a", "max_new_tokens": "thirty"}).encode(),
        json.dumps({"context": "c", "answer": "a", "max_new_tokens": True}).encode(),
        json.dumps({"context": "c", "answer": "a", "max_new_tokens": 0}).encode(),
        json.dumps({"context": "c", "answer": "a", "request_id": 7}).encode(),
    ],
)
def test_schema_violations_are_rejected(raw):
    with pytest.raises(ProtocolError):
        decode_request(raw)


def test_empty_response_fields_are_rejected():
    with pytest.raises(ProtocolError):
        encode_response("", "m1")
    with pytest.raises(ProtocolError):
        encode_response("Who?", "")
