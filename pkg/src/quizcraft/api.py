"""REST surface for the quiz design task.

Candidate payloads deliberately omit model identities, per-origin
latencies and merge counts: annotators must judge questions blind.
Every domain error maps to a 4xx response with a machine-readable
{"error_code", "message"} body.
"""

from __future__ import annotations

from datetime import datetime
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import Config, load_topics
from .domain import (
    Judgment,
    Verdict,
    concept_to_dict,
    material_to_dict,
    topic_to_dict,
)
from .errors import (
    AllBackendsFailed,
    AlreadyJudged,
    InvalidState,
    QuizcraftError,
    UnknownCandidate,
    UnknownReason,
    UnknownSession,
    UnknownTopic,
)
from .session import Orchestrator, PresentationBatch
from .store import AnnotationStore
from .taxonomy import ErrorReason, taxonomy

_STATUS_BY_ERROR: dict[type, int] = {
    UnknownTopic: 404,
    UnknownSession: 404,
    UnknownCandidate: 404,
    InvalidState: 409,
    AlreadyJudged: 409,
    AllBackendsFailed: 424,
    UnknownReason: 422,
}


def _status_for(exc: QuizcraftError) -> int:
    for klass, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    return 422


class SessionBody(BaseModel):
    annotator_id: str
    topic_id: str


class ConceptBody(BaseModel):
    char_start: int
    char_end: int


class ReasonBody(BaseModel):
    category: str
    subtype: str


class JudgmentBody(BaseModel):
    presentation_index: int
    verdict: str
    reason: ReasonBody | None = None


def _batch_payload(session_id: str, batch: PresentationBatch, warnings) -> dict:
    return {
        "session_id": session_id,
        "concept": concept_to_dict(batch.concept),
        "shuffle_seed": batch.shuffle_seed,
        "candidates": [
            {"presentation_index": c.presentation_index, "text": c.text}
            for c in sorted(batch.candidates, key=lambda c: c.presentation_index or 0)
        ],
        "excluded_count": len(batch.excluded_backends),
        "warnings": [{"code": w.code, "message": w.message} for w in warnings],
    }


def create_app(orchestrator: Orchestrator, store: AnnotationStore) -> FastAPI:
    app = FastAPI(title="quizcraft", docs_url=None, redoc_url=None)
    app.state.orchestrator = orchestrator
    app.state.store = store

    @app.exception_handler(QuizcraftError)
    async def _domain_error(_request: Request, exc: QuizcraftError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error_code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def _body_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error_code": "validation_error", "message": str(exc.errors()[:1])},
        )

    @app.get("/topics")
    def list_topics():
        return {"topics": [topic_to_dict(t) for t in orchestrator.topics()]}

    @app.get("/topics/{topic_id}/material")
    def topic_material(topic_id: str):
        return material_to_dict(orchestrator.material(topic_id))

    @app.get("/taxonomy")
    def reason_taxonomy():
        return {
            "categories": [
                {
                    "label": category.label,
                    "display_name": category.display_name,
                    "leaves": [
                        {"label": leaf.label, "display_name": leaf.display_name}
                        for leaf in category.leaves
                    ],
                }
                for category in taxonomy()
            ]
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionBody):
        if not body.annotator_id.strip():
            raise QuizcraftError("annotator_id must be non-empty")
        session = orchestrator.create_session(body.annotator_id, body.topic_id)
        return {
            "session_id": session.session_id,
            "annotator_id": session.annotator_id,
            "topic_id": session.topic_id,
            "state": session.state.value,
        }

    @app.post("/sessions/{session_id}/concepts")
    def confirm_concept(session_id: str, body: ConceptBody):
        batch, warnings = orchestrator.present_candidates(
            session_id, body.char_start, body.char_end
        )
        return _batch_payload(session_id, batch, warnings)

    @app.post("/sessions/{session_id}/judgments", status_code=201)
    def record_judgment(session_id: str, body: JudgmentBody):
        if body.verdict not in (Verdict.ACCEPT.value, Verdict.REJECT.value):
            raise QuizcraftError(f"verdict must be Accept or Reject, got {body.verdict!r}")
        reason = None
        if body.reason is not None:
            reason = ErrorReason(body.reason.category, body.reason.subtype)
        try:
            judgment = Judgment(verdict=Verdict(body.verdict), reason=reason)
        except ValueError as exc:
            raise QuizcraftError(str(exc)) from exc
        record, shuffle_seed = orchestrator.record_judgment(
            session_id, body.presentation_index, judgment
        )
        sequence_no = store.append(record, session_id, shuffle_seed)
        session = orchestrator.session(session_id)
        return {
            "sequence_no": sequence_no,
            "state": session.state.value,
            "judged_count": len(session.judged_records),
        }

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str):
        summary, warnings = orchestrator.finalize(session_id)
        return {
            "session_id": summary.session_id,
            "state": "Finalized",
            "accepted_count": len(summary.accepted),
            "judged_count": summary.judged_count,
            "accepted": [
                {"concept": concept_to_dict(c), "question_text": q}
                for c, q in summary.accepted
            ],
            "warnings": [{"code": w.code, "message": w.message} for w in warnings],
        }

    return app


def build_platform(
    config: Config,
    *,
    clock: Callable[[], datetime] | None = None,
    session_id_factory: Callable[[], str] | None = None,
) -> tuple[Orchestrator, AnnotationStore, FastAPI]:
    """Assemble orchestrator, store and app from one config.  The clock
    and id factory stay injectable for deterministic serving."""
    kwargs: dict = {}
    if clock is not None:
        kwargs["clock"] = clock
    if session_id_factory is not None:
        kwargs["session_id_factory"] = session_id_factory
    orchestrator = Orchestrator(
        list(config.backends),
        deadline_ms=config.deadline_ms,
        overhead_ms=config.overhead_ms,
        max_new_tokens=config.max_new_tokens,
        word_limit=config.word_limit,
        **kwargs,
    )
    for topic, text in load_topics(config.material_dir):
        orchestrator.add_topic(topic, text)
    store = AnnotationStore(config.store_path)
    app = create_app(orchestrator, store)
    return orchestrator, store, app
