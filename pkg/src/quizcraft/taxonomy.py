"""The fixed rejection-reason taxonomy.

Three categories, ten leaves.  Canonical labels are ASCII UpperCamelCase
identifiers so exports stay stable regardless of how a UI localizes the
display names.  The hierarchy is a fixed product constant: there is no
runtime editing and no free-text reason.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownReason

# Category -> ordered leaf labels.
_TREE: dict[str, tuple[str, ...]] = {
    "Disfluent": ("WrongTense", "AwkwardPhrasing", "NotAQuestion", "Repetition"),
    "OffTarget": ("Unanswerable", "OtherAnswerSpan"),
    "WrongContext": ("TooSpecific", "RevealsAnswer", "Inconsistent", "NotSpecificEnough"),
}

CATEGORIES: tuple[str, ...] = tuple(_TREE)

DISPLAY_NAMES: dict[str, str] = {
    "Disfluent": "Disfluent",
    "OffTarget": "Off Target",
    "WrongContext": "Wrong Context",
    "WrongTense": "Wrong Tense",
    "AwkwardPhrasing": "Awkward Phrasing",
    "NotAQuestion": "Not a Question",
    "Repetition": "Repetition",
    "Unanswerable": "Unanswerable",
    "OtherAnswerSpan": "Other Answer Span",
    "TooSpecific": "Too Specific",
    "RevealsAnswer": "Reveals Answer",
    "Inconsistent": "Inconsistent",
    "NotSpecificEnough": "Not Specific Enough",
}


@dataclass(frozen=True)
class ErrorReason:
    """A (category, subtype) pair; only the ten canonical leaves construct."""

    category: str
    subtype: str

    def __post_init__(self):
        leaves = _TREE.get(self.category)
        if leaves is None or self.subtype not in leaves:
            raise UnknownReason(
                f"({self.category!r}, {self.subtype!r}) is not a known rejection reason"
            )

    @property
    def display_category(self) -> str:
        return DISPLAY_NAMES[self.category]

    @property
    def display_subtype(self) -> str:
        return DISPLAY_NAMES[self.subtype]


@dataclass(frozen=True)
class TaxonomyLeaf:
    label: str
    display_name: str


@dataclass(frozen=True)
class TaxonomyCategory:
    label: str
    display_name: str
    leaves: tuple[TaxonomyLeaf, ...]


def validate_reason(category: str, subtype: str) -> ErrorReason:
    """Return the canonical reason for an exact (category, subtype) pair.

    Matching is exact on canonical labels; raises UnknownReason for
    anything else, including cross-category pairs.
    """
    return ErrorReason(category, subtype)


def taxonomy() -> list[TaxonomyCategory]:
    """The full hierarchy, in stable order."""
    return [
        TaxonomyCategory(
            label=cat,
            display_name=DISPLAY_NAMES[cat],
            leaves=tuple(TaxonomyLeaf(leaf, DISPLAY_NAMES[leaf]) for leaf in leaves),
        )
        for cat, leaves in _TREE.items()
    ]


def all_leaves() -> list[ErrorReason]:
    """Every valid reason, category-major order."""
    return [ErrorReason(cat, leaf) for cat, leaves in _TREE.items() for leaf in leaves]
