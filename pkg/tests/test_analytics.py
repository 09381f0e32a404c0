import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quizcraft.analytics import (
    AgreementReport,
    acceptance_rates,
    agreement_report_to_dict,
    build_metric_report,
    build_references,
    corpus_metric_per_model,
    error_distribution,
    find_co_annotations,
    iaa,
    instance_correlation,
    metric_report_to_dict,
    pearson,
    render_metric_report,
    system_correlation,
    upper_bound,
)
from quizcraft.domain import (
    AnnotationRecord,
    ConceptSelection,
    Judgment,
    Verdict,
)
from quizcraft.embedding import HashEmbedder
from quizcraft.errors import DegenerateInput, NoEligibleConcepts, TooFewModels
from quizcraft.taxonomy import ErrorReason

TS = datetime(2026, 3, 1, tzinfo=timezone.utc)

REASONS = {
    "rep": ErrorReason("Disfluent", "Repetition"),
    "unans": ErrorReason("OffTarget", "Unanswerable"),
    "spec": ErrorReason("WrongContext", "TooSpecific"),
}


def rec(annotator, topic, answer, question, models, accept, reason=None):
    concept = ConceptSelection(
        material_ref=topic,
        char_start=0,
        char_end=len(answer),
        answer_text=answer,
        word_count=len(answer.split()),
    )
    if accept:
        judgment = Judgment(verdict=Verdict.ACCEPT)
    else:
        judgment = Judgment(verdict=Verdict.REJECT, reason=reason or REASONS["rep"])
    return AnnotationRecord(
        annotator_id=annotator,
        topic_id=topic,
        concept=concept,
        question_text=question,
        model_ids=frozenset(models),
        judgment=judgment,
        timestamp=TS,
    )


# --- pearson ---------------------------------------------------------------


def test_pearson_perfect_linear():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_hand_zero_case():
    # covariance terms cancel pairwise
    assert pearson([1, 0, 1, 0], [1, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_pearson_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        pearson([1], [1])
    with pytest.raises(DegenerateInput):
        pearson([2, 2, 2], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        pearson([1, 2, 3], [5, 5, 5])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


@given(
    st.lists(st.integers(min_value=-100, max_value=100), min_size=3, max_size=20),
    st.floats(min_value=0.1, max_value=50),
    st.floats(min_value=-100, max_value=100),
)
@settings(max_examples=100, deadline=None)
def test_pearson_affine_invariance(xs, a, b):
    xs = [float(x) for x in xs]
    ys = [float(i % 3) for i in range(len(xs))]
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    base = pearson(xs, ys)
    scaled = pearson([a * x + b for x in xs], ys)
    assert scaled == pytest.approx(base, abs=1e-9)
    assert -1.0 <= base <= 1.0


# --- acceptance rates ------------------------------------------------------


def test_acceptance_rates_basic():
    records = [
        rec("a", "t", "x", "q1?", {"M"}, True),
        rec("a", "t", "x", "q2?", {"M"}, True),
        rec("a", "t", "x", "q3?", {"M"}, False),
    ]
    summary = acceptance_rates(records)
    assert summary.per_model["M"].rate == pytest.approx(2 / 3)
    assert summary.per_model["M"].n == 3
    assert summary.overall_rate == pytest.approx(2 / 3)


def test_acceptance_rates_shared_provenance():
    records = [rec("a", "t", "x", "q?", {"A", "B"}, True)]
    summary = acceptance_rates(records)
    assert summary.per_model["A"].rate == 1.0
    assert summary.per_model["B"].rate == 1.0
    assert summary.per_model["A"].n == 1


def test_acceptance_overall_is_record_weighted():
    records = [
        rec("a", "t", "x", "q1?", {"A", "B"}, True),
        rec("a", "t", "x", "q2?", {"A"}, False),
    ]
    summary = acceptance_rates(records)
    # two records, one accepted: overall 0.5 even though A+B saw 3 observations
    assert summary.overall_rate == pytest.approx(0.5)
    assert summary.per_model["A"].n == 2
    assert summary.per_model["B"].n == 1


def test_acceptance_rates_empty():
    summary = acceptance_rates([])
    assert summary.per_model == {}
    assert summary.overall_rate is None


def test_acceptance_counts_balance():
    records = [
        rec("a", "t", "x", f"q{i}?", {"A"} if i % 2 else {"A", "B"}, i % 3 == 0)
        for i in range(12)
    ]
    summary = acceptance_rates(records)
    for model_id, acc in summary.per_model.items():
        contributions = sum(1 for r in records if model_id in r.model_ids)
        assert acc.n == contributions


# --- error distribution ----------------------------------------------------


def test_error_distribution_hand_case():
    records = [
        rec("a", "t", "x", "q1?", {"M"}, True),
        rec("a", "t", "x", "q2?", {"M"}, False, REASONS["rep"]),
    ]
    breakdown = error_distribution(records)["M"]
    assert breakdown.categories == {
        "Accepted": 0.5,
        "Disfluent": 0.5,
        "OffTarget": 0.0,
        "WrongContext": 0.0,
    }
    assert breakdown.subtypes["Disfluent/Repetition"] == 0.5


def test_error_distribution_rows_sum_to_one():
    records = [
        rec("a", "t", "x", f"q{i}?", {"M", "N"} if i % 2 else {"M"}, i % 3 == 0,
            list(REASONS.values())[i % 3])
        for i in range(9)
    ]
    for breakdown in error_distribution(records).values():
        assert sum(breakdown.categories.values()) == pytest.approx(1.0, abs=1e-9)
        assert sum(breakdown.subtypes.values()) == pytest.approx(1.0, abs=1e-9)


# --- co-annotation discovery ----------------------------------------------


def test_co_annotation_pairing():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"M"}, True),
        rec("a2", "t", "statue", "Who built it?", {"M"}, False),
    ]
    pairs = find_co_annotations(records)
    assert len(pairs) == 1
    assert pairs[0].annotators == ("a1", "a2")
    assert pairs[0].verdicts == (1, 0)


def test_co_annotation_requires_shared_key():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"M"}, True),
        rec("a2", "t", "statue", "When was it built?", {"M"}, True),
        rec("a2", "t2", "statue", "Who built it?", {"M"}, True),
        rec("a2", "t", "liberty", "Who built it?", {"M"}, True),
    ]
    assert find_co_annotations(records) == []


def test_co_annotation_three_annotators_yield_three_pairs():
    records = [
        rec(a, "t", "statue", "Who built it?", {"M"}, a != "a2")
        for a in ("a1", "a2", "a3")
    ]
    pairs = find_co_annotations(records)
    assert len(pairs) == 3
    assert {p.annotators for p in pairs} == {("a1", "a2"), ("a1", "a3"), ("a2", "a3")}


def test_co_annotation_matches_whitespace_variants():
    records = [
        rec("a1", "t", "statue", "Who  built it? ", {"M"}, True),
        rec("a2", "t", "statue", "Who built it?", {"N"}, True),
    ]
    pairs = find_co_annotations(records)
    assert len(pairs) == 1
    assert pairs[0].model_ids == frozenset({"M", "N"})


def test_co_annotation_first_verdict_stands():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"M"}, True),
        rec("a1", "t", "statue", "Who built it?", {"M"}, False),
        rec("a2", "t", "statue", "Who built it?", {"M"}, True),
    ]
    pairs = find_co_annotations(records)
    assert len(pairs) == 1
    assert pairs[0].verdicts == (1, 1)


# --- iaa -------------------------------------------------------------------


def agreeing_records():
    return [
        rec("a1", "t", "statue", "q1?", {"M"}, True),
        rec("a2", "t", "statue", "q1?", {"M"}, True),
        rec("a1", "t", "statue", "q2?", {"M"}, False),
        rec("a2", "t", "statue", "q2?", {"M"}, False),
    ]


def test_iaa_perfect_agreement():
    report = iaa(agreeing_records())
    assert report.coefficient == pytest.approx(1.0)
    assert report.co_annotated_count == 2


def test_iaa_perfect_disagreement():
    records = [
        rec("a1", "t", "statue", "q1?", {"M"}, True),
        rec("a2", "t", "statue", "q1?", {"M"}, False),
        rec("a1", "t", "statue", "q2?", {"M"}, False),
        rec("a2", "t", "statue", "q2?", {"M"}, True),
    ]
    assert iaa(records).coefficient == pytest.approx(-1.0)


def test_iaa_per_model_split():
    records = [
        # model A pairs agree
        rec("a1", "t", "statue", "qa1?", {"A"}, True),
        rec("a2", "t", "statue", "qa1?", {"A"}, True),
        rec("a1", "t", "statue", "qa2?", {"A"}, False),
        rec("a2", "t", "statue", "qa2?", {"A"}, False),
        # model B pairs disagree
        rec("a1", "t", "statue", "qb1?", {"B"}, True),
        rec("a2", "t", "statue", "qb1?", {"B"}, False),
        rec("a1", "t", "statue", "qb2?", {"B"}, False),
        rec("a2", "t", "statue", "qb2?", {"B"}, True),
    ]
    report = iaa(records)
    assert report.per_model_coefficients["A"] == pytest.approx(1.0)
    assert report.per_model_coefficients["B"] == pytest.approx(-1.0)
    # pooled vectors are the hand-computed zero-correlation case
    assert report.coefficient == pytest.approx(0.0, abs=1e-12)
    assert report.co_annotated_count == 4


def test_iaa_degenerate_without_pairs():
    with pytest.raises(DegenerateInput):
        iaa([rec("a1", "t", "x", "q?", {"M"}, True)])


def test_agreement_report_serializes():
    payload = agreement_report_to_dict(iaa(agreeing_records()))
    assert json.loads(json.dumps(payload)) == payload


# --- reference building ----------------------------------------------------


def test_build_references_groups_and_dedups():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"M"}, True),
        rec("a2", "t", "statue", "Who  built it?", {"N"}, True),  # ws variant collapses
        rec("a3", "t", "statue", "When was it built?", {"M"}, True),
        rec("a1", "t", "liberty", "Where is it?", {"M"}, False),
    ]
    refs = build_references(records)
    assert refs[("t", "statue")] == ["Who built it?", "When was it built?"]
    assert ("t", "liberty") not in refs


def test_build_references_keeps_case_variants():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"M"}, True),
        rec("a2", "t", "statue", "who built it?", {"N"}, True),
    ]
    assert len(build_references(records)[("t", "statue")]) == 2


# --- instance correlation --------------------------------------------------


def separable_records():
    return [
        rec("a1", "t", "statue", "Who built the statue?", {"R1"}, True),
        rec("a2", "t", "statue", "who built the STATUE?", {"R2"}, True),
        rec("a3", "t", "statue", "green elephants sing loudly", {"M0"}, False),
        rec("a4", "t", "statue", "quantum biscuit flavor", {"M0"}, False),
    ]


def test_instance_correlation_perfect_separation():
    result = instance_correlation(separable_records(), "rouge1")
    assert result.coefficient == pytest.approx(1.0)
    assert result.scored_count == 4
    assert result.excluded_count == 0


def test_instance_correlation_counts_exclusions():
    records = separable_records() + [
        rec("a5", "t2", "moon", "Lonely question?", {"M0"}, False),  # no refs for t2
        rec("a6", "t3", "sun", "Sole accepted here?", {"M0"}, True),  # only self
    ]
    result = instance_correlation(records, "rouge1")
    assert result.excluded_count == 2
    assert result.scored_count == 4


def test_instance_correlation_degenerate_verdicts():
    records = [
        rec("a1", "t", "statue", "Who built the statue?", {"R1"}, True),
        rec("a2", "t", "statue", "who built the statue?", {"R2"}, True),
    ]
    with pytest.raises(DegenerateInput):
        instance_correlation(records, "rouge1")


def test_instance_correlation_works_for_every_metric():
    emb = HashEmbedder(dimension=16)
    for metric in ("bleu", "rouge1", "rougeL", "meteor", "embed_f1"):
        result = instance_correlation(separable_records(), metric, embedder=emb)
        assert -1.0 <= result.coefficient <= 1.0


# --- system correlation ----------------------------------------------------


def system_records():
    return [
        # concept c1: R1 and R2 both accepted, case variants of each other
        rec("a1", "t", "statue", "Who built the statue?", {"R1"}, True),
        rec("a2", "t", "statue", "who built the statue?", {"R2"}, True),
        # concept c2: three case-variant accepts + rejects
        rec("a1", "t", "liberty", "Where is liberty located?", {"R1"}, True),
        rec("a2", "t", "liberty", "where is liberty located?", {"R2"}, True),
        rec("a3", "t", "liberty", "WHERE IS LIBERTY LOCATED?", {"M5"}, True),
        rec("a3", "t", "liberty", "green elephants sing loudly", {"M5"}, False),
        rec("a4", "t", "liberty", "quantum biscuit flavor", {"M0"}, False),
    ]


def test_corpus_metric_per_model_hand_values():
    values = corpus_metric_per_model(system_records(), "rouge1")
    assert values["R1"] == pytest.approx(1.0)
    assert values["R2"] == pytest.approx(1.0)
    assert values["M5"] == pytest.approx(0.5)
    assert values["M0"] == pytest.approx(0.0)


def test_system_correlation_perfect():
    # metric value per model equals its acceptance rate by construction
    assert system_correlation(system_records(), "rouge1") == pytest.approx(1.0)


def test_system_correlation_requires_three_models():
    records = [
        rec("a1", "t", "statue", "Who built the statue?", {"R1"}, True),
        rec("a2", "t", "statue", "who built the statue?", {"R2"}, False),
    ]
    with pytest.raises(TooFewModels):
        system_correlation(records, "rouge1")


def test_system_correlation_uses_corpus_bleu():
    records = system_records()
    values = corpus_metric_per_model(records, "bleu")
    # pooled counts: a model with a single perfect question still gets 1.0
    assert values["R1"] == pytest.approx(1.0)
    assert values["M0"] == pytest.approx(0.0)
    assert -1.0 <= system_correlation(records, "bleu") <= 1.0


# --- upper bound -----------------------------------------------------------


def test_upper_bound_identical_accepted_pairs():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"A"}, True),
        rec("a2", "t", "statue", "who built it?", {"B"}, True),
    ]
    for metric in ("bleu", "rouge1", "rougeL", "embed_f1"):
        value = upper_bound(records, metric, embedder=HashEmbedder(dimension=16))
        assert value == pytest.approx(1.0), metric


def test_upper_bound_rouge1_hand_fixture():
    records = [
        rec("a1", "t", "statue", "who built the statue", {"A"}, True),
        rec("a2", "t", "statue", "who built the statue of liberty", {"B"}, True),
    ]
    assert upper_bound(records, "rouge1") == pytest.approx(0.8, abs=1e-9)


def test_upper_bound_pools_across_concepts():
    records = [
        rec("a1", "t", "statue", "who built the statue", {"A"}, True),
        rec("a2", "t", "statue", "who built the statue of liberty", {"B"}, True),
        rec("a1", "t", "moon", "alpha beta", {"A"}, True),
        rec("a2", "t", "moon", "Alpha Beta", {"B"}, True),
    ]
    # statue pairs contribute 0.8 each, moon pairs 1.0 each
    assert upper_bound(records, "rouge1") == pytest.approx((0.8 + 0.8 + 1 + 1) / 4)


def test_upper_bound_no_eligible_concepts():
    records = [
        rec("a1", "t", "statue", "Who built it?", {"A"}, True),
        rec("a2", "t", "liberty", "Where is it?", {"B"}, True),
        rec("a3", "t", "statue", "Who built it?", {"C"}, True),  # dedups away
    ]
    with pytest.raises(NoEligibleConcepts):
        upper_bound(records, "rouge1")


# --- aggregate report ------------------------------------------------------


def test_build_metric_report_structure():
    report = build_metric_report(system_records())
    assert set(report.per_model) == {"R1", "R2", "M5", "M0"}
    assert report.per_model["M5"].acceptance_rate == pytest.approx(0.5)
    assert report.per_model["M5"].metric_values["rouge1"] == pytest.approx(0.5)
    assert report.upper_bound["rouge1"] is not None
    assert report.system_corr["rouge1"] == pytest.approx(1.0)
    for metric, value in report.instance_corr.items():
        assert value is None or -1.0 <= value <= 1.0
    assert "tokenizer" in report.metadata
    assert "bleu_corpus" in report.metadata
    assert "embedding_provider" in report.metadata


def test_render_metric_report_formats():
    report = build_metric_report(system_records())
    text = render_metric_report(report)
    lines = text.splitlines()
    assert lines[0].split()[:2] == ["model", "%Acc"]
    assert any(line.startswith("Upper Bound") for line in lines)
    assert any(line.startswith("Instance Corr") for line in lines)
    # model rows are x100 with one decimal
    m5 = next(line for line in lines if line.startswith("M5"))
    assert "50.0" in m5
    # correlations are plain 3-decimal values
    syscorr = next(line for line in lines if line.startswith("System Corr"))
    assert "1.000" in syscorr


def test_metric_report_json_round_trip():
    payload = metric_report_to_dict(build_metric_report(system_records()))
    assert json.loads(json.dumps(payload)) == payload
