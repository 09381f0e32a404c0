"""Quiz design session state machine and its pure helper operations.

A session walks Created -> MaterialLoaded -> (ConceptPending <->
CandidatesPresented)* -> Finalized.  Candidate presentation composes the
model gateway (fan-out), deduplication and a seeded shuffle; judgments
append immutable records.  The orchestrator serializes operations per
session while letting distinct sessions run concurrently.
"""

from __future__ import annotations

import hashlib
import random
import re
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Iterable, Sequence

from .domain import (
    AnnotationRecord,
    CandidateQuestion,
    ConceptSelection,
    Judgment,
    ModelDescriptor,
    ReadingMaterial,
    SessionState,
    Topic,
    ValidationWarning,
    Verdict,
    validate_concept,
)
from .errors import (
    AllBackendsFailed,
    AlreadyJudged,
    EmptyMaterial,
    InvalidState,
    UnknownCandidate,
    UnknownSession,
    UnknownTopic,
)
from .gateway import GenerationRequest, GenerationResult, fan_out

DEFAULT_WORD_LIMIT = 500
QUIZ_SIZE_MIN = 8
QUIZ_SIZE_MAX = 12

_WORD_RE = re.compile(r"\S+")


def load_material(topic: Topic, raw_text: str, limit_words: int = DEFAULT_WORD_LIMIT) -> ReadingMaterial:
    """Build reading material from raw text, truncated to the first
    `limit_words` whitespace-delimited words.

    Truncation cuts at the end of the last kept word so the original
    spelling and spacing of the kept prefix survive unchanged.
    """
    if limit_words <= 0:
        raise ValueError("limit_words must be positive")
    if not raw_text.strip():
        raise EmptyMaterial("reading material is blank")
    spans = [m.span() for m in _WORD_RE.finditer(raw_text)]
    if len(spans) <= limit_words:
        text = raw_text
    else:
        text = raw_text[: spans[limit_words - 1][1]]
    return ReadingMaterial(topic_id=topic.id, text=text, word_count=min(len(spans), limit_words))


def dedup_key(text: str) -> str:
    # case-sensitive on purpose: models differing only in casing stay distinct
    return " ".join(text.split())


def dedup_candidates(raw: Iterable[tuple[str, str, int]]) -> list[CandidateQuestion]:
    """Merge raw (model_id, question_text, latency_ms) triples whose texts
    collide under the dedup key.  The merged candidate keeps the first
    received text and the union of origin models; first-occurrence order.
    """
    order: list[str] = []
    texts: dict[str, str] = {}
    latencies: dict[str, dict[str, int]] = {}
    for model_id, text, latency_ms in raw:
        key = dedup_key(text)
        if key not in texts:
            texts[key] = text
            latencies[key] = {}
            order.append(key)
        latencies[key][model_id] = latency_ms
    return [
        CandidateQuestion(
            text=texts[key],
            model_ids=frozenset(latencies[key]),
            latency_ms=dict(latencies[key]),
        )
        for key in order
    ]


def batch_seed(session_id: str, char_start: int, char_end: int) -> int:
    """64-bit shuffle seed mixed from the session id and concept offsets
    (blake2b-8 of the \\x1f-joined fields, big-endian)."""
    payload = f"{session_id}\x1f{char_start}\x1f{char_end}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def shuffle_candidates(candidates: Sequence[CandidateQuestion], seed: int) -> list[CandidateQuestion]:
    """Seeded uniform shuffle; assigns presentation_index 0..n-1 in the
    shuffled order."""
    out = list(candidates)
    random.Random(seed).shuffle(out)
    return [replace(c, presentation_index=i) for i, c in enumerate(out)]


@dataclass(frozen=True)
class PresentationBatch:
    """One shuffled, deduplicated candidate set for a confirmed concept."""

    concept: ConceptSelection
    candidates: tuple[CandidateQuestion, ...]
    shuffle_seed: int
    excluded_backends: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        keys = [dedup_key(c.text) for c in self.candidates]
        if len(set(keys)) != len(keys):
            raise ValueError("batch contains candidates with colliding texts")
        indexes = sorted(c.presentation_index for c in self.candidates)
        if indexes != list(range(len(self.candidates))):
            raise ValueError("presentation indexes must cover 0..n-1")


@dataclass(frozen=True)
class QuizSummary:
    session_id: str
    annotator_id: str
    topic_id: str
    accepted: tuple[tuple[ConceptSelection, str], ...]
    judged_count: int


class QuizSession:
    """Mutable per-annotator session.  Not thread-safe by itself; the
    orchestrator wraps every call in a per-session lock."""

    def __init__(self, session_id: str, annotator_id: str, topic_id: str) -> None:
        self.session_id = session_id
        self.annotator_id = annotator_id
        self.topic_id = topic_id
        self.state = SessionState.CREATED
        self.material: ReadingMaterial | None = None
        self.judged_records: list[AnnotationRecord] = []
        self.record_seeds: list[int] = []
        self.accepted_questions: list[tuple[ConceptSelection, str]] = []
        self.batches: list[PresentationBatch] = []
        self.current_batch: PresentationBatch | None = None
        self._judged_indexes: set[int] = set()

    def attach_material(self, material: ReadingMaterial) -> None:
        if self.state is not SessionState.CREATED:
            raise InvalidState(f"cannot load material in state {self.state.value}")
        if material.topic_id != self.topic_id:
            raise ValueError("material belongs to a different topic")
        self.material = material
        self.state = SessionState.MATERIAL_LOADED

    def begin_batch(self, batch: PresentationBatch) -> None:
        if self.state not in (SessionState.MATERIAL_LOADED, SessionState.CONCEPT_PENDING):
            raise InvalidState(f"cannot present candidates in state {self.state.value}")
        self.current_batch = batch
        self.batches.append(batch)
        self._judged_indexes = set()
        self.state = SessionState.CANDIDATES_PRESENTED

    def record_judgment(self, presentation_index: int, judgment: Judgment, timestamp: datetime) -> AnnotationRecord:
        if self.state is not SessionState.CANDIDATES_PRESENTED or self.current_batch is None:
            raise InvalidState(f"no batch awaiting judgment in state {self.state.value}")
        batch = self.current_batch
        if not 0 <= presentation_index < len(batch.candidates):
            raise UnknownCandidate(f"no candidate at index {presentation_index}")
        if presentation_index in self._judged_indexes:
            raise AlreadyJudged(f"candidate {presentation_index} already judged")
        candidate = next(
            c for c in batch.candidates if c.presentation_index == presentation_index
        )
        record = AnnotationRecord(
            annotator_id=self.annotator_id,
            topic_id=self.topic_id,
            concept=batch.concept,
            question_text=candidate.text,
            model_ids=candidate.model_ids,
            judgment=judgment,
            timestamp=timestamp,
        )
        self._judged_indexes.add(presentation_index)
        self.judged_records.append(record)
        self.record_seeds.append(batch.shuffle_seed)
        if judgment.verdict is Verdict.ACCEPT:
            self.accepted_questions.append((batch.concept, candidate.text))
        if len(self._judged_indexes) == len(batch.candidates):
            self.current_batch = None
            self.state = SessionState.CONCEPT_PENDING
        return record

    def finalize(self) -> tuple[QuizSummary, list[ValidationWarning]]:
        if self.state is not SessionState.CONCEPT_PENDING:
            raise InvalidState(f"cannot finalize in state {self.state.value}")
        self.state = SessionState.FINALIZED
        warnings: list[ValidationWarning] = []
        n = len(self.accepted_questions)
        if n < QUIZ_SIZE_MIN:
            warnings.append(
                ValidationWarning(
                    code="quiz_too_small",
                    message=f"{n} accepted questions, below recommended {QUIZ_SIZE_MIN}",
                )
            )
        elif n > QUIZ_SIZE_MAX:
            warnings.append(
                ValidationWarning(
                    code="quiz_too_large",
                    message=f"{n} accepted questions, above recommended {QUIZ_SIZE_MAX}",
                )
            )
        summary = QuizSummary(
            session_id=self.session_id,
            annotator_id=self.annotator_id,
            topic_id=self.topic_id,
            accepted=tuple(self.accepted_questions),
            judged_count=len(self.judged_records),
        )
        return summary, warnings


Clock = Callable[[], datetime]
SessionIdFactory = Callable[[], str]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def _random_session_id() -> str:
    return uuid.uuid4().hex


class Orchestrator:
    """Registry of topics, materials and live sessions.

    The clock and session-id factory are injectable so tests and seeded
    runs stay fully deterministic.
    """

    def __init__(
        self,
        backends: Sequence[ModelDescriptor],
        *,
        deadline_ms: int = 200,
        overhead_ms: int = 50,
        max_new_tokens: int = 30,
        word_limit: int = DEFAULT_WORD_LIMIT,
        clock: Clock = _utc_now,
        session_id_factory: SessionIdFactory = _random_session_id,
    ) -> None:
        self.backends = list(backends)
        self.deadline_ms = deadline_ms
        self.overhead_ms = overhead_ms
        self.max_new_tokens = max_new_tokens
        self.word_limit = word_limit
        self._clock = clock
        self._session_ids = session_id_factory
        self._topics: dict[str, Topic] = {}
        self._materials: dict[str, ReadingMaterial] = {}
        self._sessions: dict[str, QuizSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._request_counter = 0

    # -- topic registry ----------------------------------------------------

    def add_topic(self, topic: Topic, raw_text: str) -> ReadingMaterial:
        material = load_material(topic, raw_text, self.word_limit)
        with self._registry_lock:
            self._topics[topic.id] = topic
            self._materials[topic.id] = material
        return material

    def topics(self) -> list[Topic]:
        with self._registry_lock:
            return [self._topics[k] for k in sorted(self._topics)]

    def material(self, topic_id: str) -> ReadingMaterial:
        with self._registry_lock:
            if topic_id not in self._materials:
                raise UnknownTopic(f"unknown topic {topic_id!r}")
            return self._materials[topic_id]

    # -- session lifecycle -------------------------------------------------

    def create_session(self, annotator_id: str, topic_id: str) -> QuizSession:
        material = self.material(topic_id)
        session = QuizSession(self._session_ids(), annotator_id, topic_id)
        session.attach_material(material)
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def session(self, session_id: str) -> QuizSession:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise UnknownSession(f"unknown session {session_id!r}")
            return self._sessions[session_id]

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                raise UnknownSession(f"unknown session {session_id!r}")
            return self._locks[session_id]

    def _next_request_id(self, session_id: str) -> str:
        with self._registry_lock:
            self._request_counter += 1
            return f"{session_id}-{self._request_counter}"

    # -- operations --------------------------------------------------------

    def present_candidates(
        self, session_id: str, char_start: int, char_end: int
    ) -> tuple[PresentationBatch, list[ValidationWarning]]:
        session = self.session(session_id)
        with self._lock(session_id):
            if session.state not in (SessionState.MATERIAL_LOADED, SessionState.CONCEPT_PENDING):
                raise InvalidState(f"cannot present candidates in state {session.state.value}")
            assert session.material is not None
            concept, warnings = validate_concept(session.material, char_start, char_end)
            req = GenerationRequest(
                context=session.material.text,
                answer=concept.answer_text,
                max_new_tokens=self.max_new_tokens,
                request_id=self._next_request_id(session_id),
            )
            results = fan_out(
                self.backends, req, deadline_ms=self.deadline_ms, overhead_ms=self.overhead_ms
            )
            ok = [
                (r.model_id, r.question, r.latency_ms)
                for r in results
                if r.is_ok() and r.question is not None
            ]
            excluded = tuple(
                (r.model_id, r.outcome.value) for r in results if not r.is_ok()
            )
            if not ok:
                raise AllBackendsFailed("no backend produced a question within the deadline")
            seed = batch_seed(session_id, char_start, char_end)
            batch = PresentationBatch(
                concept=concept,
                candidates=tuple(shuffle_candidates(dedup_candidates(ok), seed)),
                shuffle_seed=seed,
                excluded_backends=excluded,
            )
            session.begin_batch(batch)
            return batch, warnings

    def record_judgment(
        self, session_id: str, presentation_index: int, judgment: Judgment
    ) -> tuple[AnnotationRecord, int]:
        """Returns the new record together with the shuffle seed of the
        batch it was judged in (persistence needs both)."""
        session = self.session(session_id)
        with self._lock(session_id):
            record = session.record_judgment(presentation_index, judgment, self._clock())
            return record, session.record_seeds[-1]

    def finalize(self, session_id: str) -> tuple[QuizSummary, list[ValidationWarning]]:
        session = self.session(session_id)
        with self._lock(session_id):
            return session.finalize()
