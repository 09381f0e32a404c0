"""Endpoint behaviour: wire conformance, validation, failure mapping,
and the single-flight gate."""

import json

import pytest
from fastapi.testclient import TestClient

from qgen_adapter.config import AdapterConfig, ConfigError
from qgen_adapter.engines import TemplateEngine, build_engine, truncate_tokens
from qgen_adapter.protocol import GenerateRequest, encode_request
from qgen_adapter.service import create_app
from quizcraft.gateway import PROTOCOL_TEST_VECTORS


class CannedEngine:
    def __init__(self, mapping):
        self.mapping = mapping

    def generate(self, context, answer, max_new_tokens):
        return self.mapping[answer]


class FailingEngine:
    def generate(self, context, answer, max_new_tokens):
        raise RuntimeError("weights corrupted")


def make_client(model_id="qg-demo", engine=None, **overrides):
    config = AdapterConfig(model_id=model_id, **overrides)
    return TestClient(create_app(config, engine=engine))


def post_raw(client, body: bytes):
    return client.post("/generate", content=body, headers={"content-type": "application/json"})


def test_info_reports_decoding_defaults():
    client = make_client()
    resp = client.get("/info")
    assert resp.status_code == 200
    assert resp.json() == {"model_id": "qg-demo", "beam_size": 2, "max_new_tokens": 30}


def test_info_reflects_overrides():
    client = make_client(beam_size=4, max_new_tokens=12)
    assert client.get("/info").json() == {
        "model_id": "qg-demo",
        "beam_size": 4,
        "max_new_tokens": 12,
    }


def test_generate_answers_with_configured_model_id():
    client = make_client()
    raw = encode_request(GenerateRequest("Tesla built coils.", "Tesla", 30, "r-1"))
    resp = post_raw(client, raw)
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("application/json")
    body = json.loads(resp.content)
    assert body == {"question": "What is the significance of Tesla?", "model_id": "qg-demo"}


def test_vector_responses_served_byte_for_byte():
    for vector in PROTOCOL_TEST_VECTORS:
        resp_fields = vector["response"]
        engine = CannedEngine({vector["request"]["answer"]: resp_fields["question"]})
        client = make_client(model_id=resp_fields["model_id"], engine=engine)
        resp = post_raw(client, vector["request_bytes"])
        assert resp.status_code == 200
        assert resp.content == vector["response_bytes"]


def test_missing_answer_is_rejected():
    client = make_client()
    resp = post_raw(client, json.dumps({"context": "c"}).encode())
    assert resp.status_code == 400
    assert "answer" in resp.json()["error"]


def test_malformed_body_is_rejected():
    client = make_client()
    resp = post_raw(client, b"{not json")
    assert resp.status_code == 400


def test_inference_failure_maps_to_500():
    client = make_client(engine=FailingEngine())
    raw = encode_request(GenerateRequest("c", "a", 30, "r-1"))
    resp = post_raw(client, raw)
    assert resp.status_code == 500
    assert "inference failed" in resp.json()["error"]


def test_same_request_twice_is_byte_identical():
    client = make_client()
    raw = encode_request(GenerateRequest("The dam opened in 1936.", "the dam", 30, "r-2"))
    first = post_raw(client, raw)
    second = post_raw(client, raw)
    assert first.content == second.content


def test_output_respects_requested_token_budget():
    client = make_client()
    raw = encode_request(GenerateRequest("c", "Tesla", 3, "r-3"))
    question = json.loads(post_raw(client, raw).content)["question"]
    assert question == "What is the"


def test_busy_instance_rejects_rather_than_queues():
    client = make_client()
    raw = encode_request(GenerateRequest("c", "a", 30, "r-4"))
    gate = client.app.state.gate
    assert gate.acquire(blocking=False)
    try:
        assert post_raw(client, raw).status_code == 503
    finally:
        gate.release()
    assert post_raw(client, raw).status_code == 200


def test_config_invariants():
    with pytest.raises(ConfigError):
        AdapterConfig(model_id="m", beam_size=0)
    with pytest.raises(ConfigError):
        AdapterConfig(model_id="m", max_new_tokens=0)
    with pytest.raises(ConfigError):
        AdapterConfig(model_id="")
    with pytest.raises(ConfigError):
        AdapterConfig(model_id="m", engine="hf")
    with pytest.raises(ConfigError):
        AdapterConfig(model_id="m", engine="onnx")


def test_build_engine_selects_template_by_default():
    engine = build_engine(AdapterConfig(model_id="m"))
    assert isinstance(engine, TemplateEngine)


def test_truncate_tokens_leaves_short_text_alone():
    assert truncate_tokens("who built it?", 30) == "who built it?"
    assert truncate_tokens("one two three four", 2) == "one two"
