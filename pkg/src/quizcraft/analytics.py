"""Analyses over annotation records.

Covers acceptance rates and error distributions, inter-annotator
agreement over co-annotated questions, reference-based metric scoring
with instance- and system-level correlations, and the all-pairs
upper bound computed from accepted questions.

Conventions shared by every correlation here: verdicts are encoded
Accept=1 / Reject=0, a record's own text is excluded from its reference
set, and reference sets are the accepted questions for the same
(topic, concept) pair.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .domain import AnnotationRecord, Verdict
from .embedding import EmbeddingProvider, HashEmbedder
from .errors import DegenerateInput, NoEligibleConcepts, TooFewModels
from .metrics import METRIC_NAMES, METRIC_VARIANTS, bleu_corpus, score, tokenize
from .session import dedup_key
from .taxonomy import CATEGORIES

ConceptKey = tuple[str, str]  # (topic_id, concept answer_text)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; DegenerateInput on short or constant
    inputs."""
    if len(x) != len(y):
        raise ValueError("input vectors differ in length")
    n = len(x)
    if n < 2:
        raise DegenerateInput("need at least 2 paired observations")
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    sxx = sum((a - mean_x) ** 2 for a in x)
    syy = sum((b - mean_y) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("zero variance in an input vector")
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# -- acceptance and error profiles ------------------------------------------


@dataclass(frozen=True)
class ModelAcceptance:
    rate: float
    n: int


@dataclass(frozen=True)
class AcceptanceSummary:
    per_model: dict[str, ModelAcceptance]
    overall_rate: float | None
    record_count: int


def acceptance_rates(records: Sequence[AnnotationRecord]) -> AcceptanceSummary:
    """Per-model acceptance rates.  A record whose candidate merged k
    origin models contributes one observation to each of the k models;
    the overall rate weights each record once."""
    totals: dict[str, int] = defaultdict(int)
    accepts: dict[str, int] = defaultdict(int)
    overall_accepts = 0
    for record in records:
        accepted = record.judgment.verdict is Verdict.ACCEPT
        overall_accepts += accepted
        for model_id in record.model_ids:
            totals[model_id] += 1
            accepts[model_id] += accepted
    per_model = {
        m: ModelAcceptance(rate=accepts[m] / totals[m], n=totals[m])
        for m in sorted(totals)
    }
    overall = overall_accepts / len(records) if records else None
    return AcceptanceSummary(per_model=per_model, overall_rate=overall, record_count=len(records))


@dataclass(frozen=True)
class ErrorBreakdown:
    """Proportions over verdict outcomes for one model; both maps sum
    to 1 and include the Accepted share."""

    categories: dict[str, float]
    subtypes: dict[str, float]
    n: int


def error_distribution(records: Sequence[AnnotationRecord]) -> dict[str, ErrorBreakdown]:
    cat_counts: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    sub_counts: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    totals: dict[str, int] = defaultdict(int)
    for record in records:
        if record.judgment.verdict is Verdict.ACCEPT:
            cat, sub = "Accepted", "Accepted"
        else:
            reason = record.judgment.reason
            assert reason is not None
            cat = reason.category
            sub = f"{reason.category}/{reason.subtype}"
        for model_id in record.model_ids:
            totals[model_id] += 1
            cat_counts[model_id][cat] += 1
            sub_counts[model_id][sub] += 1
    out: dict[str, ErrorBreakdown] = {}
    for model_id in sorted(totals):
        n = totals[model_id]
        categories = {"Accepted": cat_counts[model_id]["Accepted"] / n}
        for cat in CATEGORIES:
            categories[cat] = cat_counts[model_id][cat] / n
        subtypes = {k: v / n for k, v in sorted(sub_counts[model_id].items())}
        out[model_id] = ErrorBreakdown(categories=categories, subtypes=subtypes, n=n)
    return out


# -- inter-annotator agreement ----------------------------------------------

ItemKey = tuple[str, str, str]  # (topic_id, concept answer_text, dedup'd question text)


@dataclass(frozen=True)
class CoAnnotation:
    annotators: tuple[str, str]
    key: ItemKey
    verdicts: tuple[int, int]
    model_ids: frozenset[str]


def find_co_annotations(records: Sequence[AnnotationRecord]) -> list[CoAnnotation]:
    """Paired binary verdicts for every unordered annotator pair that
    judged the same question for the same concept.  When one annotator
    judged an item more than once the first verdict stands."""
    by_item: dict[ItemKey, dict[str, tuple[int, set[str]]]] = defaultdict(dict)
    for record in records:
        key: ItemKey = (record.topic_id, record.concept.answer_text, dedup_key(record.question_text))
        verdict = 1 if record.judgment.verdict is Verdict.ACCEPT else 0
        seen = by_item[key]
        if record.annotator_id in seen:
            seen[record.annotator_id][1].update(record.model_ids)
        else:
            seen[record.annotator_id] = (verdict, set(record.model_ids))
    pairs: list[CoAnnotation] = []
    for key in sorted(by_item):
        annotators = sorted(by_item[key])
        for i in range(len(annotators)):
            for j in range(i + 1, len(annotators)):
                a, b = annotators[i], annotators[j]
                va, models_a = by_item[key][a]
                vb, models_b = by_item[key][b]
                pairs.append(
                    CoAnnotation(
                        annotators=(a, b),
                        key=key,
                        verdicts=(va, vb),
                        model_ids=frozenset(models_a | models_b),
                    )
                )
    return pairs


@dataclass(frozen=True)
class AgreementReport:
    coefficient: float
    co_annotated_count: int
    per_model_coefficients: dict[str, float]


def iaa(records: Sequence[AnnotationRecord]) -> AgreementReport:
    """Pooled Pearson over all co-annotation verdict pairs, plus
    per-model coefficients where a model's pairs are non-degenerate."""
    pairs = find_co_annotations(records)
    xs = [p.verdicts[0] for p in pairs]
    ys = [p.verdicts[1] for p in pairs]
    coefficient = pearson(xs, ys)
    per_model: dict[str, float] = {}
    model_ids = sorted({m for p in pairs for m in p.model_ids})
    for model_id in model_ids:
        mine = [p for p in pairs if model_id in p.model_ids]
        try:
            per_model[model_id] = pearson(
                [p.verdicts[0] for p in mine], [p.verdicts[1] for p in mine]
            )
        except DegenerateInput:
            continue
    return AgreementReport(
        coefficient=coefficient,
        co_annotated_count=len(pairs),
        per_model_coefficients=per_model,
    )


# -- reference-based scoring ------------------------------------------------


def build_references(records: Sequence[AnnotationRecord]) -> dict[ConceptKey, list[str]]:
    """Accepted question texts grouped by (topic, concept answer text);
    duplicates under the dedup key collapse to the first occurrence."""
    refs: dict[ConceptKey, list[str]] = defaultdict(list)
    seen: dict[ConceptKey, set[str]] = defaultdict(set)
    for record in records:
        if record.judgment.verdict is not Verdict.ACCEPT:
            continue
        key: ConceptKey = (record.topic_id, record.concept.answer_text)
        text_key = dedup_key(record.question_text)
        if text_key in seen[key]:
            continue
        seen[key].add(text_key)
        refs[key].append(record.question_text)
    return dict(refs)


def _references_excluding_self(
    record: AnnotationRecord, references: dict[ConceptKey, list[str]]
) -> list[str]:
    key: ConceptKey = (record.topic_id, record.concept.answer_text)
    own = dedup_key(record.question_text)
    return [t for t in references.get(key, []) if dedup_key(t) != own]


@dataclass(frozen=True)
class InstanceCorrelation:
    coefficient: float
    scored_count: int
    excluded_count: int


def instance_correlation(
    records: Sequence[AnnotationRecord],
    metric: str,
    embedder: EmbeddingProvider | None = None,
) -> InstanceCorrelation:
    """Correlation between per-question metric scores (against same
    concept accepted references, own text excluded) and binary verdicts."""
    references = build_references(records)
    scores: list[float] = []
    verdicts: list[float] = []
    excluded = 0
    for record in records:
        refs = _references_excluding_self(record, references)
        if not refs:
            excluded += 1
            continue
        scores.append(score(metric, record.question_text, refs, embedder=embedder).value)
        verdicts.append(1.0 if record.judgment.verdict is Verdict.ACCEPT else 0.0)
    coefficient = pearson(scores, verdicts)
    return InstanceCorrelation(
        coefficient=coefficient, scored_count=len(scores), excluded_count=excluded
    )


def corpus_metric_per_model(
    records: Sequence[AnnotationRecord],
    metric: str,
    embedder: EmbeddingProvider | None = None,
) -> dict[str, float]:
    """Corpus-level metric value per model over its scorable questions.

    bleu pools n-gram counts (corpus BLEU); every other metric averages
    sentence scores.  Models with no scorable question are omitted.
    """
    references = build_references(records)
    per_model_items: dict[str, list[tuple[str, list[str]]]] = defaultdict(list)
    for record in records:
        refs = _references_excluding_self(record, references)
        if not refs:
            continue
        for model_id in record.model_ids:
            per_model_items[model_id].append((record.question_text, refs))
    out: dict[str, float] = {}
    for model_id in sorted(per_model_items):
        items = per_model_items[model_id]
        if metric == "bleu":
            pairs = [(tokenize(c), [tokenize(r) for r in refs]) for c, refs in items]
            out[model_id] = bleu_corpus(pairs)
        else:
            values = [score(metric, c, refs, embedder=embedder).value for c, refs in items]
            out[model_id] = sum(values) / len(values)
    return out


def system_correlation(
    records: Sequence[AnnotationRecord],
    metric: str,
    embedder: EmbeddingProvider | None = None,
) -> float:
    """Pearson between per-model acceptance rates and per-model corpus
    metric values.  Requires at least 3 models with scorable questions."""
    summary = acceptance_rates(records)
    if len(summary.per_model) < 3:
        raise TooFewModels(f"system correlation needs >= 3 models, got {len(summary.per_model)}")
    metric_values = corpus_metric_per_model(records, metric, embedder=embedder)
    model_ids = [m for m in sorted(summary.per_model) if m in metric_values]
    if len(model_ids) < 3:
        raise TooFewModels(
            f"only {len(model_ids)} models have scorable questions, need >= 3"
        )
    x = [summary.per_model[m].rate for m in model_ids]
    y = [metric_values[m] for m in model_ids]
    return pearson(x, y)


def upper_bound(
    records: Sequence[AnnotationRecord],
    metric: str,
    embedder: EmbeddingProvider | None = None,
) -> float:
    """Mean metric score over all ordered pairs of distinct accepted
    questions within each concept, pooled across concepts."""
    references = build_references(records)
    values: list[float] = []
    for key in sorted(references):
        texts = references[key]
        if len(texts) < 2:
            continue
        for i, candidate in enumerate(texts):
            for j, reference in enumerate(texts):
                if i == j:
                    continue
                values.append(score(metric, candidate, [reference], embedder=embedder).value)
    if not values:
        raise NoEligibleConcepts("no concept has two or more distinct accepted questions")
    return sum(values) / len(values)


# -- aggregate report -------------------------------------------------------


@dataclass(frozen=True)
class ModelReport:
    acceptance_rate: float
    n: int
    metric_values: dict[str, float | None]


@dataclass(frozen=True)
class MetricReport:
    per_model: dict[str, ModelReport]
    upper_bound: dict[str, float | None]
    instance_corr: dict[str, float | None]
    system_corr: dict[str, float | None]
    metadata: dict[str, str]


def build_metric_report(
    records: Sequence[AnnotationRecord],
    metric_names: Sequence[str] = METRIC_NAMES,
    embedder: EmbeddingProvider | None = None,
) -> MetricReport:
    """Full scorecard: per-model acceptance and corpus metric values plus
    upper-bound and correlation rows.  Degenerate analyses yield None
    rather than aborting the report."""
    if embedder is None:
        embedder = HashEmbedder(dimension=32, seed=0)
        embedder_note = "hash-embedder(dimension=32, seed=0)"
    else:
        embedder_note = type(embedder).__name__
    summary = acceptance_rates(records)
    per_metric_model_values: dict[str, dict[str, float]] = {}
    bounds: dict[str, float | None] = {}
    inst: dict[str, float | None] = {}
    syst: dict[str, float | None] = {}
    for metric in metric_names:
        per_metric_model_values[metric] = corpus_metric_per_model(records, metric, embedder=embedder)
        try:
            bounds[metric] = upper_bound(records, metric, embedder=embedder)
        except NoEligibleConcepts:
            bounds[metric] = None
        try:
            inst[metric] = instance_correlation(records, metric, embedder=embedder).coefficient
        except DegenerateInput:
            inst[metric] = None
        try:
            syst[metric] = system_correlation(records, metric, embedder=embedder)
        except (DegenerateInput, TooFewModels):
            syst[metric] = None
    per_model: dict[str, ModelReport] = {}
    for model_id, acc in summary.per_model.items():
        per_model[model_id] = ModelReport(
            acceptance_rate=acc.rate,
            n=acc.n,
            metric_values={
                metric: per_metric_model_values[metric].get(model_id)
                for metric in metric_names
            },
        )
    metadata = dict(METRIC_VARIANTS)
    metadata["embedding_provider"] = embedder_note
    return MetricReport(
        per_model=per_model,
        upper_bound=bounds,
        instance_corr=inst,
        system_corr=syst,
        metadata=metadata,
    )


_METRIC_HEADERS = {
    "bleu": "BLEU",
    "rouge1": "ROUGE-1",
    "rougeL": "ROUGE-L",
    "meteor": "METEOR",
    "embed_f1": "EmbedF1",
}


def _fmt_pct(value: float | None) -> str:
    return "n/a" if value is None else f"{value * 100:.1f}"


def _fmt_corr(value: float | None) -> str:
    if value is None:
        return "n/a"
    text = f"{value:.3f}"
    return text.replace("0.", ".", 1) if "0." in text else text


def render_metric_report(report: MetricReport, metric_names: Sequence[str] = METRIC_NAMES) -> str:
    """Aligned plain-text scorecard: model rows and the upper bound
    shown x100 at one decimal, correlations at three decimals."""
    headers = ["model", "%Acc"] + [_METRIC_HEADERS.get(m, m) for m in metric_names]
    rows: list[list[str]] = []
    for model_id, mr in report.per_model.items():
        rows.append(
            [model_id, _fmt_pct(mr.acceptance_rate)]
            + [_fmt_pct(mr.metric_values.get(m)) for m in metric_names]
        )
    rows.append(["Upper Bound", "-"] + [_fmt_pct(report.upper_bound.get(m)) for m in metric_names])
    rows.append(["Instance Corr", "-"] + [_fmt_corr(report.instance_corr.get(m)) for m in metric_names])
    rows.append(["System Corr", "-"] + [_fmt_corr(report.system_corr.get(m)) for m in metric_names])
    widths = [
        max(len(headers[col]), *(len(r[col]) for r in rows))
        for col in range(len(headers))
    ]
    def fmt_row(cells: list[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [cells[i].rjust(widths[i]) for i in range(1, len(cells))]
        return "  ".join([first] + rest).rstrip()
    lines = [fmt_row(headers)]
    lines.extend(fmt_row(r) for r in rows)
    return "\n".join(lines)


def metric_report_to_dict(report: MetricReport) -> dict:
    return {
        "per_model": {
            m: {
                "acceptance_rate": mr.acceptance_rate,
                "n": mr.n,
                "metric_values": mr.metric_values,
            }
            for m, mr in report.per_model.items()
        },
        "upper_bound": report.upper_bound,
        "instance_corr": report.instance_corr,
        "system_corr": report.system_corr,
        "metadata": report.metadata,
    }


def agreement_report_to_dict(report: AgreementReport) -> dict:
    return {
        "coefficient": report.coefficient,
        "co_annotated_count": report.co_annotated_count,
        "per_model_coefficients": report.per_model_coefficients,
    }
