"""Build the full analytics report from a synthetic annotation log.

Run with:  python3 demos/analytics_report.py

Three simulated teachers judge questions from three models over shared
concepts.  Accepted questions double as references, so the report can
score every model's output against what the other models got accepted,
correlate those scores with the human accept/reject decisions, and put
an upper bound on what any metric could reach for this corpus.
"""

from datetime import datetime, timedelta, timezone

from quizcraft.analytics import (
    acceptance_rates,
    build_metric_report,
    error_distribution,
    iaa,
    render_metric_report,
    upper_bound,
)
from quizcraft.domain import AnnotationRecord, ConceptSelection, Judgment, Verdict
from quizcraft.taxonomy import ErrorReason

START = datetime(2026, 3, 1, 9, 0, tzinfo=timezone.utc)

# (annotator, answer, question, model, verdict, reason)
JUDGMENTS = [
    ("t1", "Bartholdi", "who designed the statue", "mixer", "accept", None),
    ("t2", "Bartholdi", "Who designed the statue", "mixer", "accept", None),
    ("t1", "Bartholdi", "who made the the statue", "tiny", "reject", ("Disfluent", "Repetition")),
    ("t2", "Bartholdi", "who made the the statue", "tiny", "reject", ("Disfluent", "Repetition")),
    ("t1", "Bartholdi", "who designed it", "base", "reject", ("WrongContext", "NotSpecificEnough")),
    ("t3", "1886", "when was the statue dedicated", "mixer", "accept", None),
    ("t1", "1886", "when was it dedicated", "base", "accept", None),
    ("t3", "1886", "when was it dedicated", "base", "accept", None),
    ("t3", "1886", "what year is it", "tiny", "reject", ("OffTarget", "Unanswerable")),
    ("t2", "copper", "what metal is the statue made of", "mixer", "accept", None),
    ("t2", "copper", "what is the statue made of", "base", "accept", None),
    ("t2", "copper", "is the statue copper", "tiny", "reject", ("WrongContext", "RevealsAnswer")),
]


def build_records() -> list[AnnotationRecord]:
    records = []
    for offset, (annotator, answer, question, model, verdict, reason) in enumerate(JUDGMENTS):
        concept = ConceptSelection(
            material_ref="liberty",
            char_start=0,
            char_end=len(answer),
            answer_text=answer,
            word_count=len(answer.split()),
        )
        if verdict == "accept":
            judgment = Judgment(verdict=Verdict.ACCEPT)
        else:
            judgment = Judgment(verdict=Verdict.REJECT, reason=ErrorReason(*reason))
        records.append(
            AnnotationRecord(
                annotator_id=annotator,
                topic_id="liberty",
                concept=concept,
                question_text=question,
                model_ids=frozenset([model]),
                judgment=judgment,
                timestamp=START + timedelta(minutes=offset),
            )
        )
    return records


def main() -> None:
    records = build_records()

    summary = acceptance_rates(records)
    print("acceptance by model")
    for model_id, acc in sorted(summary.per_model.items()):
        print(f"  {model_id:8s} {acc.rate:.3f} (n={acc.n})")
    print(f"  overall  {summary.overall_rate:.3f}\n")

    print("rejection reasons (share of a model's judgments)")
    for model_id, breakdown in sorted(error_distribution(records).items()):
        accepted = breakdown.subtypes.get("Accepted", 0.0)
        top = sorted(
            (item for item in breakdown.subtypes.items() if item[0] != "Accepted"),
            key=lambda kv: -kv[1],
        )[:2]
        shown = ", ".join(f"{leaf}={share:.2f}" for leaf, share in top if share > 0)
        print(f"  {model_id:8s} accepted={accepted:.2f}  {shown}")
    print()

    agreement = iaa(records)
    print(
        f"inter-annotator agreement: {agreement.coefficient:.3f} "
        f"over {agreement.co_annotated_count} co-annotated questions\n"
    )

    print(f"upper bound (rouge1): {upper_bound(records, 'rouge1'):.3f}\n")

    report = build_metric_report(records)
    print(render_metric_report(report))


if __name__ == "__main__":
    main()
