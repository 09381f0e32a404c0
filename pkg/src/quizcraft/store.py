"""Append-only annotation store plus export/import and material ingestion.

The on-disk format is line-delimited JSON, UTF-8, one entry per line,
keys in a fixed canonical order so exports are diffable and re-exports
are byte-identical.  Imports validate every domain invariant and reject
the whole file on the first violation, reporting the line number.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .domain import (
    AnnotationRecord,
    ConceptSelection,
    Judgment,
    ReadingMaterial,
    Topic,
    Verdict,
    parse_timestamp,
)
from .errors import (
    EmptyMaterial,
    InvariantViolation,
    ParseError,
    QuizcraftError,
    StorageFailure,
)
from .session import load_material
from .taxonomy import ErrorReason

MAX_SEED = 2**64


@dataclass(frozen=True)
class RecordLogEntry:
    sequence_no: int
    record: AnnotationRecord
    session_id: str
    shuffle_seed: int

    def __post_init__(self) -> None:
        if self.sequence_no < 1:
            raise ValueError("sequence_no starts at 1")
        if not self.session_id:
            raise ValueError("session_id must be non-empty")
        if not 0 <= self.shuffle_seed < MAX_SEED:
            raise ValueError("shuffle_seed must fit in 64 bits")


def entry_to_dict(entry: RecordLogEntry) -> dict:
    record = entry.record
    out: dict = {
        "sequence_no": entry.sequence_no,
        "annotator_id": record.annotator_id,
        "topic_id": record.topic_id,
        "concept": {
            "answer_text": record.concept.answer_text,
            "char_start": record.concept.char_start,
            "char_end": record.concept.char_end,
        },
        "question_text": record.question_text,
        "model_ids": sorted(record.model_ids),
        "verdict": record.judgment.verdict.value,
    }
    if record.judgment.reason is not None:
        out["reason"] = {
            "category": record.judgment.reason.category,
            "subtype": record.judgment.reason.subtype,
        }
    out["timestamp"] = record.timestamp.isoformat()
    out["session_id"] = entry.session_id
    out["shuffle_seed"] = entry.shuffle_seed
    return out


def encode_entry(entry: RecordLogEntry) -> str:
    return json.dumps(entry_to_dict(entry), ensure_ascii=False, separators=(",", ":"))


def _require(condition: bool, line_no: int, field: str, message: str) -> None:
    if not condition:
        raise InvariantViolation(line_no, field, message)


def _string_field(obj: dict, key: str, line_no: int) -> str:
    value = obj.get(key)
    _require(isinstance(value, str) and bool(value), line_no, key, "must be a non-empty string")
    return value


def decode_line(line: str, line_no: int) -> RecordLogEntry:
    """Parse and validate one export line; ParseError for malformed JSON,
    InvariantViolation naming the field for anything structurally wrong."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError(line_no, "line is not a JSON object")

    seq = obj.get("sequence_no")
    _require(isinstance(seq, int) and not isinstance(seq, bool) and seq >= 1,
             line_no, "sequence_no", "must be a positive integer")
    annotator_id = _string_field(obj, "annotator_id", line_no)
    topic_id = _string_field(obj, "topic_id", line_no)
    question_text = _string_field(obj, "question_text", line_no)
    session_id = _string_field(obj, "session_id", line_no)

    concept_obj = obj.get("concept")
    _require(isinstance(concept_obj, dict), line_no, "concept", "must be an object")
    answer_text = concept_obj.get("answer_text")
    char_start = concept_obj.get("char_start")
    char_end = concept_obj.get("char_end")
    _require(isinstance(answer_text, str), line_no, "concept", "answer_text must be a string")
    for key, value in (("char_start", char_start), ("char_end", char_end)):
        _require(isinstance(value, int) and not isinstance(value, bool),
                 line_no, "concept", f"{key} must be an integer")
    try:
        concept = ConceptSelection(
            material_ref=topic_id,
            char_start=char_start,
            char_end=char_end,
            answer_text=answer_text,
            word_count=len(answer_text.split()),
        )
    except (QuizcraftError, ValueError) as exc:
        raise InvariantViolation(line_no, "concept", str(exc)) from exc

    model_ids = obj.get("model_ids")
    _require(isinstance(model_ids, list) and bool(model_ids),
             line_no, "model_ids", "must be a non-empty list")
    _require(all(isinstance(m, str) and m for m in model_ids),
             line_no, "model_ids", "entries must be non-empty strings")

    verdict_raw = obj.get("verdict")
    _require(verdict_raw in (Verdict.ACCEPT.value, Verdict.REJECT.value),
             line_no, "verdict", "must be Accept or Reject")
    reason_obj = obj.get("reason")
    reason = None
    if reason_obj is not None:
        _require(isinstance(reason_obj, dict), line_no, "reason", "must be an object")
        try:
            reason = ErrorReason(reason_obj.get("category"), reason_obj.get("subtype"))
        except QuizcraftError as exc:
            raise InvariantViolation(line_no, "reason", str(exc)) from exc
    try:
        judgment = Judgment(verdict=Verdict(verdict_raw), reason=reason)
    except (QuizcraftError, ValueError) as exc:
        raise InvariantViolation(line_no, "reason", str(exc)) from exc

    timestamp_raw = _string_field(obj, "timestamp", line_no)
    try:
        timestamp = parse_timestamp(timestamp_raw)
    except ValueError as exc:
        raise InvariantViolation(line_no, "timestamp", str(exc)) from exc

    seed = obj.get("shuffle_seed")
    _require(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < MAX_SEED,
             line_no, "shuffle_seed", "must be a 64-bit unsigned integer")

    try:
        record = AnnotationRecord(
            annotator_id=annotator_id,
            topic_id=topic_id,
            concept=concept,
            question_text=question_text,
            model_ids=frozenset(model_ids),
            judgment=judgment,
            timestamp=timestamp,
        )
    except (QuizcraftError, ValueError) as exc:
        raise InvariantViolation(line_no, "record", str(exc)) from exc
    return RecordLogEntry(
        sequence_no=seq, record=record, session_id=session_id, shuffle_seed=seed
    )


def read_export(path: str | Path) -> list[RecordLogEntry]:
    """Load a whole export file; any bad line rejects the entire file."""
    entries: list[RecordLogEntry] = []
    previous_seq = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.rstrip("\n")
            entry = decode_line(stripped, line_no)
            _require(entry.sequence_no > previous_seq, line_no, "sequence_no",
                     f"must exceed previous value {previous_seq}")
            previous_seq = entry.sequence_no
            entries.append(entry)
    return entries


def write_export(path: str | Path, entries: Iterable[RecordLogEntry]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(encode_entry(entry))
            handle.write("\n")


class AnnotationStore:
    """Durable append-only log backed by one JSONL file.

    Opening an existing file validates and loads every entry; appends
    continue the sequence.  Writes are serialized; reads return
    immutable snapshots.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: list[RecordLogEntry] = []
        if self.path.exists() and self.path.stat().st_size > 0:
            self._entries = read_export(self.path)
        try:
            self._handle = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot open store at {self.path}: {exc}") from exc
        self._closed = False

    def append(self, record: AnnotationRecord, session_id: str, shuffle_seed: int) -> int:
        with self._lock:
            if self._closed:
                raise StorageFailure("store is closed")
            sequence_no = self._entries[-1].sequence_no + 1 if self._entries else 1
            entry = RecordLogEntry(
                sequence_no=sequence_no,
                record=record,
                session_id=session_id,
                shuffle_seed=shuffle_seed,
            )
            try:
                self._handle.write(encode_entry(entry) + "\n")
                self._handle.flush()
                os.fsync(self._handle.fileno())
            except OSError as exc:
                raise StorageFailure(f"append failed: {exc}") from exc
            self._entries.append(entry)
            return sequence_no

    def entries(self) -> list[RecordLogEntry]:
        with self._lock:
            return list(self._entries)

    def records(self) -> list[AnnotationRecord]:
        return [e.record for e in self.entries()]

    def export(self, path: str | Path) -> int:
        snapshot = self.entries()
        write_export(path, snapshot)
        return len(snapshot)

    def close(self) -> None:
        with self._lock:
            if not self._closed:
                self._handle.close()
                self._closed = True

    def __enter__(self) -> "AnnotationStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def import_material(topic: Topic, text_path: str | Path, limit_words: int = 500) -> ReadingMaterial:
    """Read a topic's raw text file and apply first-N-words truncation."""
    raw = Path(text_path).read_text(encoding="utf-8")
    if not raw.strip():
        raise EmptyMaterial(f"material file {text_path} is blank")
    return load_material(topic, raw, limit_words)
