"""Walk through the text-similarity metrics on a handful of question pairs.

Run with:  python3 demos/metrics_walkthrough.py

Every metric shares one whitespace-and-punctuation tokenizer, so the
numbers below are directly comparable.  The pairs are chosen to show
where the metrics disagree: n-gram overlap rewards exact wording,
the LCS-based score tolerates insertions, the alignment-based score
discounts scrambled word order, and the embedding score gives partial
credit for synonyms only if the embedder does.
"""

import math

from quizcraft.embedding import HashEmbedder
from quizcraft.metrics import (
    METRIC_NAMES,
    bleu_corpus,
    bleu_sentence,
    score,
    tokenize,
)

PAIRS = [
    ("exact", "who built the statue", "who built the statue"),
    ("extension", "who built the statue", "who built the statue of liberty"),
    ("reorder", "the statue who built", "who built the statue"),
    ("paraphrase", "who constructed the monument", "who built the statue"),
    ("unrelated", "what color is the sky", "who built the statue"),
]


def main() -> None:
    embedder = HashEmbedder(dimension=32, seed=0)

    header = ["pair".ljust(12)] + [name.rjust(9) for name in METRIC_NAMES]
    print("".join(header))
    for label, candidate, reference in PAIRS:
        row = [label.ljust(12)]
        for name in METRIC_NAMES:
            value = score(name, candidate, [reference], embedder=embedder).value
            row.append(f"{value:9.3f}")
        print("".join(row))

    # Sentence BLEU smooths higher-order n-grams, so near misses keep a
    # nonzero score; the pooled corpus variant does not smooth and is the
    # one to quote for system-level comparisons.  With zero bigram matches
    # the two variants come apart.
    candidate = tokenize("who constructed the monument")
    reference = [tokenize("who built the statue")]
    print()
    print(f"sentence BLEU (smoothed):   {bleu_sentence(candidate, reference):.4f}")
    print(f"corpus BLEU (one segment):  {bleu_corpus([(candidate, reference)]):.4f}")

    # The three-token candidate against a four-token reference is a handy
    # closed form: every n-gram matches, so only the brevity penalty
    # remains and the score is exp(1 - 4/3).
    value = bleu_sentence(tokenize("the cat sat"), [tokenize("the cat sat down")], max_n=3)
    print(f"brevity-only BLEU:          {value:.6f}  (exp(1-4/3) = {math.exp(1 - 4 / 3):.6f})")


if __name__ == "__main__":
    main()
