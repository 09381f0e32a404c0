"""Drive one quiz-design session end to end against mock model backends.

Run with:  python3 demos/session_flow.py

The flow mirrors what the web client does over REST: load a topic,
confirm a concept span, review the shuffled anonymous candidates,
accept or reject each one, repeat, then finalize.  Everything here is
deterministic: the shuffle seed is derived from the session id and the
concept span, and the mock backends answer instantly.
"""

import tempfile
from pathlib import Path

from quizcraft.domain import Judgment, ModelDescriptor, Topic, Verdict
from quizcraft.session import Orchestrator
from quizcraft.store import AnnotationStore
from quizcraft.taxonomy import ErrorReason

BACKENDS = [
    ModelDescriptor("alpha", "mock://template", "Alpha"),
    ModelDescriptor(
        "bravo", "mock://canned?Bartholdi=Who+designed+the+statue%3F", "Bravo"
    ),
    ModelDescriptor("charlie", "mock://fixed?text=What+does+the+text+describe%3F", "Charlie"),
    ModelDescriptor("delta", "mock://fixed?text=Unreachable%3F&delay_ms=5000", "Delta"),
]

MATERIAL = (
    "The Statue of Liberty was designed by Bartholdi and dedicated in 1886. "
    "The copper statue stands on Liberty Island in New York Harbor."
)


def main() -> None:
    orchestrator = Orchestrator(BACKENDS, deadline_ms=100)
    orchestrator.add_topic(Topic("liberty", "Statue of Liberty", "demo://liberty"), MATERIAL)

    session = orchestrator.create_session("teacher-demo", "liberty")
    print(f"session {session.session_id} state={session.state.value}")

    store_path = Path(tempfile.mkdtemp()) / "annotations.jsonl"
    with AnnotationStore(store_path) as store:
        for answer in ("Bartholdi", "Liberty Island"):
            start = MATERIAL.index(answer)
            batch, warnings = orchestrator.present_candidates(
                session.session_id, start, start + len(answer)
            )
            print(f"\nconcept {batch.concept.answer_text!r}  seed={batch.shuffle_seed}")
            for code, outcome in batch.excluded_backends:
                print(f"  excluded {code}: {outcome}")
            for candidate in sorted(batch.candidates, key=lambda c: c.presentation_index):
                print(f"  [{candidate.presentation_index}] {candidate.text}")

            # Accept the first candidate, reject the rest with a reason.
            # The annotator never sees which model wrote which question.
            for candidate in sorted(batch.candidates, key=lambda c: c.presentation_index):
                if candidate.presentation_index == 0:
                    judgment = Judgment(verdict=Verdict.ACCEPT)
                else:
                    judgment = Judgment(
                        verdict=Verdict.REJECT,
                        reason=ErrorReason("WrongContext", "NotSpecificEnough"),
                    )
                record, seed = orchestrator.record_judgment(
                    session.session_id, candidate.presentation_index, judgment
                )
                store.append(record, session.session_id, seed)

        summary, warnings = orchestrator.finalize(session.session_id)
        print(f"\nfinalized with {len(summary.accepted)} accepted questions")
        for warning in warnings:
            print(f"  warning {warning.code}: {warning.message}")

    print(f"\nappend-only log at {store_path}:")
    for line in store_path.read_text().splitlines()[:2]:
        print(f"  {line[:100]}...")


if __name__ == "__main__":
    main()
