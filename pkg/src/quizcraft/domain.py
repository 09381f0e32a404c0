"""Core domain types: pure data plus validation, no I/O.

All types are immutable after construction and enforce their invariants in
``__post_init__`` — an invalid value is unconstructible, not merely
flagged.  Each type has a canonical JSON shape (snake_case field names)
shared by the REST API, the export format, and the UI; the ``*_to_dict`` /
``*_from_dict`` pairs below are the single source of truth for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Mapping

from .errors import BlankSelection, OffsetsOutOfRange
from .taxonomy import ErrorReason

# Selections longer than this many words trigger an advisory warning;
# they are never blocked.
CONCEPT_WORD_LIMIT = 8


@dataclass(frozen=True)
class ValidationWarning:
    """A non-fatal warning surfaced to the user alongside a result."""

    code: str
    message: str


@dataclass(frozen=True)
class Topic:
    id: str
    title: str
    source_uri: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("topic id must be non-empty")


@dataclass(frozen=True)
class ReadingMaterial:
    topic_id: str
    text: str
    word_count: int

    def __post_init__(self):
        actual = len(self.text.split())
        if self.word_count != actual:
            raise ValueError(f"word_count {self.word_count} != actual {actual}")


@dataclass(frozen=True)
class ConceptSelection:
    """A span of the reading material chosen as the quiz concept."""

    material_ref: str
    char_start: int
    char_end: int
    answer_text: str
    word_count: int

    def __post_init__(self):
        if not (0 <= self.char_start < self.char_end):
            raise OffsetsOutOfRange(
                f"offsets ({self.char_start}, {self.char_end}) out of range"
            )
        if len(self.answer_text) != self.char_end - self.char_start:
            raise ValueError("answer_text length does not match offsets")
        if not self.answer_text.strip():
            raise BlankSelection("selected span is whitespace-only")
        if self.word_count != len(self.answer_text.split()):
            raise ValueError("word_count does not match answer_text")


@dataclass(frozen=True)
class CandidateQuestion:
    """A generated question with provenance after dedup.

    ``model_ids`` holds every backend that produced this text;
    ``latency_ms`` maps each origin to its response latency.
    ``presentation_index`` is assigned only after shuffling.
    """

    text: str
    model_ids: frozenset[str]
    latency_ms: Mapping[str, int] = field(default_factory=dict)
    presentation_index: int | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("candidate text must be non-empty")
        if not self.model_ids:
            raise ValueError("model_ids must be non-empty")
        if any(v < 0 for v in self.latency_ms.values()):
            raise ValueError("latency_ms values must be non-negative")
        if self.presentation_index is not None and self.presentation_index < 0:
            raise ValueError("presentation_index must be >= 0")


class Verdict(Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


@dataclass(frozen=True)
class Judgment:
    """Accept, or Reject with exactly one taxonomy reason."""

    verdict: Verdict
    reason: ErrorReason | None = None

    def __post_init__(self):
        if self.verdict is Verdict.REJECT and self.reason is None:
            raise ValueError("Reject requires a reason")
        if self.verdict is Verdict.ACCEPT and self.reason is not None:
            raise ValueError("Accept must not carry a reason")


@dataclass(frozen=True)
class AnnotationRecord:
    """One judged candidate question: who, what concept, which models, verdict."""

    annotator_id: str
    topic_id: str
    concept: ConceptSelection
    question_text: str
    model_ids: frozenset[str]
    judgment: Judgment
    timestamp: datetime

    def __post_init__(self):
        if not self.question_text:
            raise ValueError("question_text must be non-empty")
        if not self.model_ids:
            raise ValueError("model_ids must be non-empty")
        if self.timestamp.tzinfo is None or self.timestamp.utcoffset() != timedelta(0):
            raise ValueError("timestamp must be an aware UTC instant")


@dataclass(frozen=True)
class ModelDescriptor:
    model_id: str
    endpoint: str
    display_name: str

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")


class SessionState(Enum):
    CREATED = "Created"
    MATERIAL_LOADED = "MaterialLoaded"
    CONCEPT_PENDING = "ConceptPending"
    CANDIDATES_PRESENTED = "CandidatesPresented"
    FINALIZED = "Finalized"


def validate_concept(
    material: ReadingMaterial, char_start: int, char_end: int
) -> tuple[ConceptSelection, list[ValidationWarning]]:
    """Build a ConceptSelection from offsets into the material text.

    Raises OffsetsOutOfRange for invalid offsets and BlankSelection for a
    whitespace-only span.  Selections longer than CONCEPT_WORD_LIMIT words
    get an advisory warning but are never rejected.
    """
    if not (0 <= char_start < char_end <= len(material.text)):
        raise OffsetsOutOfRange(
            f"offsets ({char_start}, {char_end}) invalid for text of length {len(material.text)}"
        )
    answer_text = material.text[char_start:char_end]
    if not answer_text.strip():
        raise BlankSelection("selected span is whitespace-only")
    selection = ConceptSelection(
        material_ref=material.topic_id,
        char_start=char_start,
        char_end=char_end,
        answer_text=answer_text,
        word_count=len(answer_text.split()),
    )
    warnings = []
    if selection.word_count > CONCEPT_WORD_LIMIT:
        warnings.append(
            ValidationWarning(
                code="concept_too_long",
                message=f"concept longer than {CONCEPT_WORD_LIMIT} words",
            )
        )
    return selection, warnings


# ---------------------------------------------------------------------------
# Canonical JSON shapes
# ---------------------------------------------------------------------------

def topic_to_dict(topic: Topic) -> dict[str, Any]:
    return {"id": topic.id, "title": topic.title, "source_uri": topic.source_uri}


def material_to_dict(material: ReadingMaterial) -> dict[str, Any]:
    return {
        "topic_id": material.topic_id,
        "text": material.text,
        "word_count": material.word_count,
    }


def concept_to_dict(concept: ConceptSelection) -> dict[str, Any]:
    return {
        "material_ref": concept.material_ref,
        "char_start": concept.char_start,
        "char_end": concept.char_end,
        "answer_text": concept.answer_text,
        "word_count": concept.word_count,
    }


def concept_from_dict(data: Mapping[str, Any]) -> ConceptSelection:
    return ConceptSelection(
        material_ref=data["material_ref"],
        char_start=data["char_start"],
        char_end=data["char_end"],
        answer_text=data["answer_text"],
        word_count=data["word_count"],
    )


def reason_to_dict(reason: ErrorReason) -> dict[str, Any]:
    return {"category": reason.category, "subtype": reason.subtype}


def judgment_to_dict(judgment: Judgment) -> dict[str, Any]:
    out: dict[str, Any] = {"verdict": judgment.verdict.value}
    if judgment.reason is not None:
        out["reason"] = reason_to_dict(judgment.reason)
    return out


def judgment_from_dict(data: Mapping[str, Any]) -> Judgment:
    verdict = Verdict(data["verdict"])
    reason = None
    if data.get("reason") is not None:
        reason = ErrorReason(data["reason"]["category"], data["reason"]["subtype"])
    return Judgment(verdict=verdict, reason=reason)


def record_to_dict(record: AnnotationRecord) -> dict[str, Any]:
    return {
        "annotator_id": record.annotator_id,
        "topic_id": record.topic_id,
        "concept": concept_to_dict(record.concept),
        "question_text": record.question_text,
        "model_ids": sorted(record.model_ids),
        "judgment": judgment_to_dict(record.judgment),
        "timestamp": record.timestamp.isoformat(),
    }


def record_from_dict(data: Mapping[str, Any]) -> AnnotationRecord:
    return AnnotationRecord(
        annotator_id=data["annotator_id"],
        topic_id=data["topic_id"],
        concept=concept_from_dict(data["concept"]),
        question_text=data["question_text"],
        model_ids=frozenset(data["model_ids"]),
        judgment=judgment_from_dict(data["judgment"]),
        timestamp=parse_timestamp(data["timestamp"]),
    )


def parse_timestamp(raw: str) -> datetime:
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {raw!r} lacks a UTC offset")
    return ts.astimezone(timezone.utc)


def descriptor_to_dict(descriptor: ModelDescriptor) -> dict[str, Any]:
    return {
        "model_id": descriptor.model_id,
        "endpoint": descriptor.endpoint,
        "display_name": descriptor.display_name,
    }
