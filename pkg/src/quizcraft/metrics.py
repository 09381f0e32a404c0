"""Reference-based similarity metrics for generated questions.

All metrics share one tokenizer and score into [0, 1].  Variant choices
(smoothing, multi-reference policy, stemmer, matching rules) are pinned
here and exported as METRIC_VARIANTS so downstream reports are
self-describing rather than "BLEU, some flavor".

A token sequence is a plain ``list[str]`` with no empty-string tokens;
``tokenize`` produces compliant sequences.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from .embedding import EmbeddingProvider
from .errors import MissingEmbedder, UnknownMetric

TokenSequence = Sequence[str]

METRIC_NAMES = ("bleu", "rouge1", "rougeL", "meteor", "embed_f1")

METRIC_VARIANTS = {
    "tokenizer": "unicode lowercase; every non-alphanumeric, non-space character "
    "split off as its own token; whitespace split",
    "bleu_sentence": "multi-reference max-clip; brevity penalty exp(1-r/c) with "
    "closest reference length (ties -> shorter); add-1 smoothing on orders >= 2 "
    "with zero matches",
    "bleu_corpus": "counts pooled over pairs before precision; brevity penalty "
    "from summed lengths; no smoothing",
    "rouge": "per-reference F1 of clipped n-gram (or LCS) precision/recall; "
    "max over references",
    "meteor": "exact then stem matching stages; alignment minimizes chunk count "
    "among maximal matchings; alpha=0.9, beta=3.0, gamma=0.5; no synonym stage",
    "embed_f1": "greedy token matching on cosine similarity clamped to [0,1]; "
    "no idf weighting, no baseline rescaling; max over references",
}


def tokenize(text: str) -> list[str]:
    """Lowercase, isolate punctuation into single-character tokens, split.

    Any character that is neither alphanumeric nor whitespace counts as
    punctuation.  Blank input yields an empty sequence.
    """
    out: list[str] = []
    for ch in text.lower():
        if ch.isalnum() or ch.isspace():
            out.append(ch)
        else:
            out.append(f" {ch} ")
    return "".join(out).split()


def _ngram_counts(tokens: TokenSequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_length(cand_len: int, references: Sequence[TokenSequence]) -> int:
    # ties resolved toward the shorter reference
    return min((abs(len(r) - cand_len), len(r)) for r in references)[1]


def bleu_sentence(
    candidate: TokenSequence,
    references: Sequence[TokenSequence],
    max_n: int = 4,
) -> float:
    """Smoothed sentence-level BLEU against one or more references."""
    if not references:
        raise ValueError("references must be non-empty")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        ref_counts = [_ngram_counts(ref, n) for ref in references]
        matches = 0
        for gram, count in cand_counts.items():
            clip = max(rc[gram] for rc in ref_counts)
            matches += min(count, clip)
        if n >= 2 and matches == 0:
            precision = (matches + 1) / (total + 1)
        elif total == 0 or matches == 0:
            return 0.0
        else:
            precision = matches / total
        log_sum += math.log(precision)
    c = len(candidate)
    r = _closest_ref_length(c, references)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum / max_n)


def bleu_corpus(
    pairs: Sequence[tuple[TokenSequence, Sequence[TokenSequence]]],
    max_n: int = 4,
) -> float:
    """Corpus BLEU: n-gram counts pooled over all pairs, unsmoothed."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    match_totals = [0] * max_n
    count_totals = [0] * max_n
    cand_len_sum = 0
    ref_len_sum = 0
    for candidate, references in pairs:
        if not references:
            raise ValueError("references must be non-empty")
        cand_len_sum += len(candidate)
        ref_len_sum += _closest_ref_length(len(candidate), references)
        for n in range(1, max_n + 1):
            cand_counts = _ngram_counts(candidate, n)
            count_totals[n - 1] += sum(cand_counts.values())
            ref_counts = [_ngram_counts(ref, n) for ref in references]
            for gram, count in cand_counts.items():
                clip = max(rc[gram] for rc in ref_counts)
                match_totals[n - 1] += min(count, clip)
    if cand_len_sum == 0 or any(m == 0 for m in match_totals):
        return 0.0
    log_sum = sum(
        math.log(m / t) for m, t in zip(match_totals, count_totals)
    )
    brevity = 1.0 if cand_len_sum > ref_len_sum else math.exp(1.0 - ref_len_sum / cand_len_sum)
    return brevity * math.exp(log_sum / max_n)


def rouge_n(
    candidate: TokenSequence,
    references: Sequence[TokenSequence],
    n: int = 1,
) -> float:
    """Clipped n-gram F1, best over references."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not references:
        raise ValueError("references must be non-empty")
    if not candidate:
        return 0.0
    cand_counts = _ngram_counts(candidate, n)
    cand_total = sum(cand_counts.values())
    best = 0.0
    for ref in references:
        ref_counts = _ngram_counts(ref, n)
        ref_total = sum(ref_counts.values())
        matches = sum(min(count, ref_counts[g]) for g, count in cand_counts.items())
        precision = matches / cand_total if cand_total else 0.0
        recall = matches / ref_total if ref_total else 0.0
        best = max(best, _f1(precision, recall))
    return best


def lcs_length(a: TokenSequence, b: TokenSequence) -> int:
    """Length of the longest common subsequence (dynamic programming)."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        append = curr.append
        for j, y in enumerate(b, 1):
            if x == y:
                append(prev[j - 1] + 1)
            else:
                left = curr[j - 1]
                up = prev[j]
                append(left if left >= up else up)
        prev = curr
    return prev[-1]


def rouge_l(candidate: TokenSequence, references: Sequence[TokenSequence]) -> float:
    """LCS-based F1, best over references."""
    if not references:
        raise ValueError("references must be non-empty")
    if not candidate:
        return 0.0
    best = 0.0
    for ref in references:
        lcs = lcs_length(candidate, ref)
        precision = lcs / len(candidate)
        recall = lcs / len(ref) if ref else 0.0
        best = max(best, _f1(precision, recall))
    return best


def _f1(precision: float, recall: float) -> float:
    total = precision + recall
    return 2.0 * precision * recall / total if total else 0.0


# ---------------------------------------------------------------------------
# Stemmer (used only by the meteor stem-match stage)
# ---------------------------------------------------------------------------

# (suffix, replacement); first match wins, applied at most once.
_SUFFIX_RULES = (
    ("ingly", ""),
    ("edly", ""),
    ("iness", "y"),
    ("ness", ""),
    ("ies", "y"),
    ("ied", "y"),
    ("ing", ""),
    ("est", ""),
    ("ers", ""),
    ("ed", ""),
    ("er", ""),
)


def stem(token: str) -> str:
    """Strip one common English suffix.

    Rules, in order: -ingly/-edly/-ness drop; -iness -> -y; -ies/-ied -> -y;
    -ing/-est/-ers/-ed/-er drop; finally a plural -s drops unless the word
    ends in -ss, -us, or -is.  A rule applies only when at least three
    characters remain, and a doubled b/d/g/m/n/p/r/t left by -ing/-ed
    stripping is undoubled (stopp- -> stop-).  Tokens of three characters
    or fewer pass through untouched.
    """
    if len(token) <= 3:
        return token
    for suffix, replacement in _SUFFIX_RULES:
        if token.endswith(suffix):
            base = token[: -len(suffix)] + replacement
            if len(base) < 3:
                continue
            if suffix in ("ing", "ed") and len(base) >= 4 and base[-1] == base[-2] and base[-1] in "bdgmnprt":
                base = base[:-1]
            return base
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        base = token[:-1]
        if len(base) >= 3:
            return base
    return token


# ---------------------------------------------------------------------------
# METEOR
# ---------------------------------------------------------------------------

_METEOR_ALPHA = 0.9
_METEOR_BETA = 3.0
_METEOR_GAMMA = 0.5

# Alignment search is exact below this many enumerable assignments; beyond
# it (texts with many repeated tokens) a deterministic ascending pairing
# is used instead.
_MAX_ALIGNMENTS = 50_000


def meteor(candidate: TokenSequence, references: Sequence[TokenSequence]) -> float:
    """Two-stage (exact, then stem) matching with a chunk-based fragmentation
    penalty; best score over references."""
    if not references:
        raise ValueError("references must be non-empty")
    if not candidate:
        return 0.0
    best = 0.0
    for ref in references:
        if not ref:
            continue
        matches, chunks = _meteor_alignment(candidate, ref)
        if matches == 0:
            continue
        precision = matches / len(candidate)
        recall = matches / len(ref)
        fmean = (
            precision
            * recall
            / (_METEOR_ALPHA * precision + (1.0 - _METEOR_ALPHA) * recall)
        )
        penalty = _METEOR_GAMMA * (chunks / matches) ** _METEOR_BETA
        best = max(best, fmean * (1.0 - penalty))
    return best


def _meteor_alignment(candidate: TokenSequence, reference: TokenSequence) -> tuple[int, int]:
    """Return (match count, chunk count) for the best two-stage alignment.

    Stage one matches identical tokens, stage two matches residual tokens
    with equal stems.  Both stages pair as many tokens as possible; among
    those maximal pairings the one with the fewest chunks (maximal runs
    contiguous on both sides) wins.
    """
    cand_positions: dict[str, list[int]] = defaultdict(list)
    ref_positions: dict[str, list[int]] = defaultdict(list)
    for i, tok in enumerate(candidate):
        cand_positions[tok].append(i)
    for j, tok in enumerate(reference):
        ref_positions[tok].append(j)

    exact_groups = []
    for tok in cand_positions:
        if tok in ref_positions:
            quota = min(len(cand_positions[tok]), len(ref_positions[tok]))
            exact_groups.append((cand_positions[tok], ref_positions[tok], quota))

    # Residual occurrence counts are the same for every maximal exact
    # matching, so stem-stage quotas (and the total match count) are fixed
    # before any specific assignment is chosen.
    residual_c = Counter()
    residual_r = Counter()
    for tok, positions in cand_positions.items():
        shared = min(len(positions), len(ref_positions.get(tok, ())))
        if len(positions) > shared:
            residual_c[stem(tok)] += len(positions) - shared
    for tok, positions in ref_positions.items():
        shared = min(len(positions), len(cand_positions.get(tok, ())))
        if len(positions) > shared:
            residual_r[stem(tok)] += len(positions) - shared

    exact_total = sum(q for _, _, q in exact_groups)
    stem_total = sum(
        min(count, residual_r[s]) for s, count in residual_c.items() if s in residual_r
    )
    total = exact_total + stem_total
    if total == 0:
        return 0, 0

    estimate = 1
    for cpos, rpos, quota in exact_groups:
        estimate *= math.comb(len(cpos), quota) * math.perm(len(rpos), quota)
        if estimate > _MAX_ALIGNMENTS:
            break
    for s, count in residual_c.items():
        if estimate > _MAX_ALIGNMENTS:
            break
        other = residual_r.get(s, 0)
        quota = min(count, other)
        if quota:
            estimate *= math.comb(count, quota) * math.perm(other, quota)

    if estimate > _MAX_ALIGNMENTS:
        pairs = _greedy_pairs(exact_groups)
        leftovers_c = _greedy_leftovers(exact_groups, cand_positions, side=0)
        leftovers_r = _greedy_leftovers(exact_groups, ref_positions, side=1)
        stem_groups = _stem_groups(leftovers_c, leftovers_r, candidate, reference)
        pairs += _greedy_pairs(stem_groups)
        pairs.sort()
        return total, _count_chunks(pairs)

    best_chunks = total + 1
    for pairs1, left_c, left_r in _group_assignments(exact_groups):
        rest_c = left_c + [
            p for tok, ps in cand_positions.items() if tok not in ref_positions for p in ps
        ]
        rest_r = left_r + [
            p for tok, ps in ref_positions.items() if tok not in cand_positions for p in ps
        ]
        stem_groups = _stem_groups(rest_c, rest_r, candidate, reference)
        for pairs2, _, _ in _group_assignments(stem_groups):
            pairs = sorted(pairs1 + pairs2)
            chunks = _count_chunks(pairs)
            if chunks < best_chunks:
                best_chunks = chunks
                if best_chunks == 1:
                    return total, 1
    return total, best_chunks


def _stem_groups(
    rest_c: list[int], rest_r: list[int], candidate: TokenSequence, reference: TokenSequence
) -> list[tuple[list[int], list[int], int]]:
    by_stem_c: dict[str, list[int]] = defaultdict(list)
    by_stem_r: dict[str, list[int]] = defaultdict(list)
    for p in sorted(rest_c):
        by_stem_c[stem(candidate[p])].append(p)
    for p in sorted(rest_r):
        by_stem_r[stem(reference[p])].append(p)
    groups = []
    for s in by_stem_c:
        if s in by_stem_r:
            quota = min(len(by_stem_c[s]), len(by_stem_r[s]))
            groups.append((by_stem_c[s], by_stem_r[s], quota))
    return groups


def _group_assignments(
    groups: list[tuple[list[int], list[int], int]],
) -> Iterable[tuple[list[tuple[int, int]], list[int], list[int]]]:
    """Yield (pairs, unused candidate positions, unused reference positions)
    for every way of pairing each group's quota of occurrences."""
    if not groups:
        yield [], [], []
        return
    cpos, rpos, quota = groups[0]
    for tail_pairs, tail_c, tail_r in _group_assignments(groups[1:]):
        for chosen_c in combinations(cpos, quota):
            left_c = [p for p in cpos if p not in chosen_c]
            for chosen_r in permutations(rpos, quota):
                left_r = [p for p in rpos if p not in chosen_r]
                yield (
                    list(zip(chosen_c, chosen_r)) + tail_pairs,
                    left_c + tail_c,
                    left_r + tail_r,
                )


def _greedy_pairs(groups: list[tuple[list[int], list[int], int]]) -> list[tuple[int, int]]:
    pairs = []
    for cpos, rpos, quota in groups:
        pairs.extend(zip(sorted(cpos)[:quota], sorted(rpos)[:quota]))
    return pairs


def _greedy_leftovers(groups, positions_map, side: int) -> list[int]:
    used = set()
    for group in groups:
        quota = group[2]
        used.update(sorted(group[side])[:quota])
    return [p for ps in positions_map.values() for p in ps if p not in used]


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


# ---------------------------------------------------------------------------
# Embedding F1
# ---------------------------------------------------------------------------

def embed_f1(
    candidate: TokenSequence,
    references: Sequence[TokenSequence],
    embedder: EmbeddingProvider,
) -> float:
    """Greedy cosine-matching F1 between token embeddings, best over references.

    Recall averages, over reference tokens, the highest similarity to any
    candidate token; precision is symmetric.  Similarities are clamped to
    [0, 1] before averaging.
    """
    if not references:
        raise ValueError("references must be non-empty")
    if not candidate:
        return 0.0
    cand_vectors = np.asarray(embedder.embed(list(candidate)))
    best = 0.0
    for ref in references:
        if not ref:
            continue
        ref_vectors = np.asarray(embedder.embed(list(ref)))
        sims = np.clip(cand_vectors @ ref_vectors.T, 0.0, 1.0)
        precision = float(sims.max(axis=1).mean())
        recall = float(sims.max(axis=0).mean())
        best = max(best, _f1(precision, recall))
    return best


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricScore:
    metric_name: str
    value: float

    def __post_init__(self):
        if self.metric_name not in METRIC_NAMES:
            raise UnknownMetric(f"unknown metric {self.metric_name!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"metric value {self.value} outside [0, 1]")


def score(
    metric_name: str,
    candidate_text: str,
    reference_texts: Sequence[str],
    embedder: EmbeddingProvider | None = None,
) -> MetricScore:
    """Tokenize and dispatch to a metric by name.

    Sentence-level BLEU (smoothed) is used here so every individual
    question gets a usable score; each metric applies its own
    multi-reference policy.
    """
    if metric_name not in METRIC_NAMES:
        raise UnknownMetric(f"unknown metric {metric_name!r}")
    candidate = tokenize(candidate_text)
    references = [tokenize(t) for t in reference_texts]
    if metric_name == "bleu":
        value = bleu_sentence(candidate, references)
    elif metric_name == "rouge1":
        value = rouge_n(candidate, references, n=1)
    elif metric_name == "rougeL":
        value = rouge_l(candidate, references)
    elif metric_name == "meteor":
        value = meteor(candidate, references)
    else:
        if embedder is None:
            raise MissingEmbedder("embed_f1 requires an embedding provider")
        value = embed_f1(candidate, references, embedder)
    return MetricScore(metric_name=metric_name, value=value)
