"""Error types shared across the platform.

Every error carries a stable machine-readable ``code`` so that the REST
layer and the CLI can emit ``{error_code, message}`` payloads without
inspecting exception classes.
"""

from __future__ import annotations


class QuizcraftError(Exception):
    """Base class for all platform errors."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class OffsetsOutOfRange(QuizcraftError):
    code = "offsets_out_of_range"


class BlankSelection(QuizcraftError):
    code = "blank_selection"


class UnknownReason(QuizcraftError):
    code = "unknown_reason"


class EmptyMaterial(QuizcraftError):
    code = "empty_material"


class UnknownTopic(QuizcraftError):
    code = "unknown_topic"


class UnknownSession(QuizcraftError):
    code = "unknown_session"


class InvalidState(QuizcraftError):
    code = "invalid_state"


class AlreadyJudged(QuizcraftError):
    code = "already_judged"


class UnknownCandidate(QuizcraftError):
    code = "unknown_candidate"


class AllBackendsFailed(QuizcraftError):
    code = "all_backends_failed"


class UnknownMetric(QuizcraftError):
    code = "unknown_metric"


class MissingEmbedder(QuizcraftError):
    code = "missing_embedder"


class DegenerateInput(QuizcraftError):
    code = "degenerate_input"


class TooFewModels(QuizcraftError):
    code = "too_few_models"


class NoEligibleConcepts(QuizcraftError):
    code = "no_eligible_concepts"


class StorageFailure(QuizcraftError):
    code = "storage_failure"


class ParseError(QuizcraftError):
    code = "parse_error"

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvariantViolation(QuizcraftError):
    code = "invariant_violation"

    def __init__(self, line_no: int, field: str, message: str):
        super().__init__(f"line {line_no}: field '{field}': {message}")
        self.line_no = line_no
        self.field = field


class ConfigError(QuizcraftError):
    code = "config_error"
