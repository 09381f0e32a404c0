"""Human-in-the-loop evaluation platform for question generation models.

Teachers design quizzes from reading material by selecting concepts and
judging anonymized model-generated candidate questions; the package
also ships the reference-based metrics and the analyses used to compare
those judgments with automatic scores.
"""

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
from .errors import QuizcraftError
from .metrics import METRIC_NAMES, MetricScore, score, tokenize
from .session import Orchestrator, PresentationBatch, QuizSession, load_material
from .store import AnnotationStore, RecordLogEntry, read_export, write_export
from .taxonomy import ErrorReason, taxonomy, validate_reason

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "AnnotationStore",
    "CandidateQuestion",
    "ConceptSelection",
    "ErrorReason",
    "Judgment",
    "METRIC_NAMES",
    "MetricScore",
    "ModelDescriptor",
    "Orchestrator",
    "PresentationBatch",
    "QuizSession",
    "QuizcraftError",
    "ReadingMaterial",
    "RecordLogEntry",
    "SessionState",
    "Topic",
    "ValidationWarning",
    "Verdict",
    "load_material",
    "read_export",
    "score",
    "taxonomy",
    "tokenize",
    "validate_concept",
    "validate_reason",
    "write_export",
    "__version__",
]
