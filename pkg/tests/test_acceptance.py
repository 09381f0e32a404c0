"""Release acceptance gate.

Each test verifies one acceptance criterion end to end and reports a
single PASS/FAIL line in the terminal summary.  The metric-oracle
criterion is budgeted at 60 seconds; by default it runs an exhaustive
check over a reduced sequence-length scope plus a large seeded sample
of the full scope, because the complete pair space does not fit the
budget on a single-core interpreter (measured arithmetic in the repo
notes).  Set QUIZCRAFT_ACCEPTANCE_FULL=1 to run the complete pair
space regardless of runtime.
"""

import itertools
import json
import math
import os
import time
from collections import Counter
from contextlib import contextmanager
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from fastapi.testclient import TestClient

from quizcraft.analytics import iaa, pearson, upper_bound
from quizcraft.api import build_platform
from quizcraft.cli import main as cli_main
from quizcraft.config import Config
from quizcraft.domain import (
    AnnotationRecord,
    ConceptSelection,
    Judgment,
    ModelDescriptor,
    Verdict,
)
from quizcraft.embedding import HashEmbedder
from quizcraft.gateway import MOCK_TEMPLATE, GenerationRequest, fan_out
from quizcraft.metrics import (
    bleu_sentence,
    embed_f1,
    lcs_length,
    meteor,
    rouge_l,
    rouge_n,
)
from quizcraft.taxonomy import ErrorReason

TOL = 1e-9
FULL_SCOPE = os.environ.get("QUIZCRAFT_ACCEPTANCE_FULL") == "1"


@contextmanager
def criterion(criteria: list[str], name: str):
    info: dict[str, str] = {}
    try:
        yield info
    except BaseException as exc:
        line = f"FAIL {name}: {type(exc).__name__}: {exc}"
        criteria.append(line)
        print(line)
        raise
    line = f"PASS {name}: {info.get('detail', 'ok')}"
    criteria.append(line)
    print(line)


# ---------------------------------------------------------------------------
# Criterion 1: from-scratch metrics match brute-force oracles
# ---------------------------------------------------------------------------

LCS_ALPHABET = ("a", "b", "c")
LCS_DIGITS = {tok: i + 1 for i, tok in enumerate(LCS_ALPHABET)}


def _sequences_up_to(alphabet, max_len):
    out = [()]
    for length in range(1, max_len + 1):
        out.extend(itertools.product(alphabet, repeat=length))
    return out


def _subsequence_codes_by_length(seq):
    """Every subsequence of seq, enumerated via the power set and encoded
    as a base-4 integer, grouped by subsequence length."""
    digits = [LCS_DIGITS[tok] for tok in seq]
    n = len(digits)
    codes = [0] * (1 << n)
    by_length = [set() for _ in range(n + 1)]
    by_length[0].add(0)
    for mask in range(1, 1 << n):
        high = mask.bit_length() - 1
        code = codes[mask ^ (1 << high)] * 4 + digits[high]
        codes[mask] = code
        by_length[mask.bit_count()].add(code)
    return by_length


def _lcs_oracle(sets_a, sets_b):
    for length in range(min(len(sets_a), len(sets_b)) - 1, 0, -1):
        if not sets_a[length].isdisjoint(sets_b[length]):
            return length
    return 0


def _rouge1_oracle(candidate, reference):
    cand = Counter(candidate)
    ref = Counter(reference)
    overlap = sum(min(count, ref[tok]) for tok, count in cand.items())
    precision = overlap / len(candidate)
    recall = overlap / len(reference)
    total = precision + recall
    return 2.0 * precision * recall / total if total else 0.0


EMBED_VOCAB = ("red", "green", "blue", "gold")


def _token_similarities(embedder):
    vectors = [[float(x) for x in row] for row in embedder.embed(list(EMBED_VOCAB))]
    table = {}
    for a, va in zip(EMBED_VOCAB, vectors):
        for b, vb in zip(EMBED_VOCAB, vectors):
            dot = sum(x * y for x, y in zip(va, vb))
            table[a, b] = min(max(dot, 0.0), 1.0)
    return table


def _embed_f1_oracle(candidate, reference, sims):
    precision = sum(max(sims[c, r] for r in reference) for c in candidate) / len(candidate)
    recall = sum(max(sims[c, r] for r in candidate) for c in reference) / len(reference)
    total = precision + recall
    return 2.0 * precision * recall / total if total else 0.0


def test_metric_oracle_equivalence(criteria):
    with criterion(criteria, "metric-oracle-equivalence") as info:
        start = time.perf_counter()
        rng = np.random.default_rng(20260823)

        exhaustive_len = 8 if FULL_SCOPE else 6
        exhaustive = _sequences_up_to(LCS_ALPHABET, exhaustive_len)
        subseq_sets = {seq: _subsequence_codes_by_length(seq) for seq in exhaustive}
        lcs_pairs = 0
        for i, a in enumerate(exhaustive):
            sets_a = subseq_sets[a]
            impl = lcs_length
            for b in exhaustive[i:]:
                assert impl(a, b) == _lcs_oracle(sets_a, subseq_sets[b])
                lcs_pairs += 1

        lcs_sampled = 0
        if not FULL_SCOPE:
            full = _sequences_up_to(LCS_ALPHABET, 8)
            cache: dict[tuple, list] = {}
            for ai, bi in rng.integers(0, len(full), size=(200_000, 2)):
                a, b = full[ai], full[bi]
                sets_a = cache.get(a) or cache.setdefault(a, _subsequence_codes_by_length(a))
                sets_b = cache.get(b) or cache.setdefault(b, _subsequence_codes_by_length(b))
                assert lcs_length(a, b) == _lcs_oracle(sets_a, sets_b)
                lcs_sampled += 1

        rouge_vocab = ("u", "v", "w", "x", "y", "z")
        rouge_pairs = 0
        for _ in range(1_000):
            cand = tuple(rng.choice(rouge_vocab, size=rng.integers(1, 13)))
            ref = tuple(rng.choice(rouge_vocab, size=rng.integers(1, 13)))
            assert rouge_n(cand, [ref], n=1) == pytest.approx(
                _rouge1_oracle(cand, ref), abs=TOL
            )
            rouge_pairs += 1

        embedder = HashEmbedder(dimension=32, seed=0)
        sims = _token_similarities(embedder)
        embed_len = 5 if FULL_SCOPE else 4
        embed_space = _sequences_up_to(EMBED_VOCAB, embed_len)[1:]
        embed_pairs = 0
        for cand in embed_space:
            for ref in embed_space:
                assert embed_f1(cand, [ref], embedder) == pytest.approx(
                    _embed_f1_oracle(cand, ref, sims), abs=TOL
                )
                embed_pairs += 1

        embed_sampled = 0
        if not FULL_SCOPE:
            embed_full = _sequences_up_to(EMBED_VOCAB, 5)[1:]
            for ci, ri in rng.integers(0, len(embed_full), size=(50_000, 2)):
                cand, ref = embed_full[ci], embed_full[ri]
                assert embed_f1(cand, [ref], embedder) == pytest.approx(
                    _embed_f1_oracle(cand, ref, sims), abs=TOL
                )
                embed_sampled += 1

        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s, budget is 60s"
        scope = "full scope" if FULL_SCOPE else (
            f"exhaustive len<={exhaustive_len} + {lcs_sampled} sampled len<=8 lcs pairs, "
            f"{embed_sampled} sampled len<=5 embed pairs"
        )
        info["detail"] = (
            f"lcs {lcs_pairs} pairs, rouge1 {rouge_pairs} pairs, "
            f"embed_f1 {embed_pairs} pairs ({scope}; tol 1e-9, {elapsed:.1f}s)"
        )


# ---------------------------------------------------------------------------
# Criterion 2: closed-form values and identity contracts
# ---------------------------------------------------------------------------

def test_closed_form_metric_values(criteria):
    with criterion(criteria, "closed-form-checks") as info:
        bleu = bleu_sentence(
            ("the", "cat", "sat"), [("the", "cat", "sat", "down")], max_n=3
        )
        assert bleu == pytest.approx(math.exp(1.0 - 4.0 / 3.0), abs=TOL)

        identity_4 = meteor(
            ("the", "cat", "sat", "down"), [("the", "cat", "sat", "down")]
        )
        assert identity_4 == pytest.approx(0.9921875, abs=TOL)

        rng = np.random.default_rng(7)
        vocab = ("the", "cat", "sat", "down", "on", "a", "red", "mat")
        embedder = HashEmbedder(dimension=32, seed=0)
        checked = 0
        for _ in range(500):
            x = tuple(rng.choice(vocab, size=rng.integers(1, 11)))
            m = len(x)
            assert bleu_sentence(x, [x]) == pytest.approx(1.0, abs=TOL)
            assert rouge_n(x, [x], n=1) == pytest.approx(1.0, abs=TOL)
            assert rouge_l(x, [x]) == pytest.approx(1.0, abs=TOL)
            assert embed_f1(x, [x], embedder) == pytest.approx(1.0, abs=TOL)
            assert meteor(x, [x]) == pytest.approx(1.0 - 0.5 * (1.0 / m) ** 3, abs=TOL)
            checked += 1

        info["detail"] = (
            f"bleu=exp(1-4/3), meteor 4-token identity=0.9921875, "
            f"identity contracts on {checked} random sequences (tol 1e-9)"
        )


# ---------------------------------------------------------------------------
# Criterion 3: upper-bound procedure on pinned fixtures
# ---------------------------------------------------------------------------

TS0 = datetime(2026, 3, 1, tzinfo=timezone.utc)


def _record(annotator, topic, answer, question, models, accept, ts=TS0):
    concept = ConceptSelection(
        material_ref=topic,
        char_start=0,
        char_end=len(answer),
        answer_text=answer,
        word_count=len(answer.split()),
    )
    judgment = (
        Judgment(verdict=Verdict.ACCEPT)
        if accept
        else Judgment(verdict=Verdict.REJECT, reason=ErrorReason("Disfluent", "Repetition"))
    )
    return AnnotationRecord(
        annotator_id=annotator,
        topic_id=topic,
        concept=concept,
        question_text=question,
        model_ids=frozenset(models),
        judgment=judgment,
        timestamp=ts,
    )


def test_upper_bound_reference_values(criteria):
    with criterion(criteria, "upper-bound-procedure") as info:
        paired = []
        for answer in ("statue", "liberty", "harbor"):
            paired.append(
                _record("a1", "t", answer, "who built the statue", {"A"}, True)
            )
            paired.append(
                _record("a2", "t", answer, "who built the statue of liberty", {"B"}, True)
            )
        value = upper_bound(paired, "rouge1")
        assert value == pytest.approx(0.8, abs=TOL)

        identical = [
            _record("a1", "t", "statue", "who built the statue", {"A"}, True),
            _record("a2", "t", "statue", "Who Built The Statue", {"B"}, True),
        ]
        assert upper_bound(identical, "rouge1") == pytest.approx(1.0, abs=TOL)

        info["detail"] = (
            f"upper_bound(rouge1)={value:.9f} on the two-reference fixture, "
            "identical-content pairs=1.0 (released-dataset ranking clause not "
            "exercised: dataset not installed)"
        )


# ---------------------------------------------------------------------------
# Criterion 4: statistical helpers
# ---------------------------------------------------------------------------

def test_statistical_properties(criteria):
    with criterion(criteria, "statistics") as info:
        rng = np.random.default_rng(99)
        trials = 0
        worst = 0.0
        for _ in range(1_000):
            n = int(rng.integers(3, 51))
            x = rng.uniform(-100.0, 100.0, size=n).tolist()
            y = rng.uniform(-100.0, 100.0, size=n).tolist()
            a = float(rng.uniform(0.1, 10.0))
            b = float(rng.uniform(-50.0, 50.0))
            scaled = [a * v + b for v in x]
            delta = abs(pearson(scaled, y) - pearson(x, y))
            worst = max(worst, delta)
            assert delta < TOL
            trials += 1

        agree = []
        disagree = []
        for i, accept in enumerate([True, False, True, False]):
            question = f"question number {i}?"
            agree.append(_record("a1", "t", "statue", question, {"M"}, accept))
            agree.append(_record("a2", "t", "statue", question, {"M"}, accept))
            disagree.append(_record("a1", "t", "statue", question, {"M"}, accept))
            disagree.append(_record("a2", "t", "statue", question, {"M"}, not accept))
        assert iaa(agree).coefficient == pytest.approx(1.0, abs=TOL)
        assert iaa(disagree).coefficient == pytest.approx(-1.0, abs=TOL)

        info["detail"] = (
            f"pearson affine invariance over {trials} random vectors "
            f"(worst |delta|={worst:.2e}), agreement fixtures = +1.0 / -1.0"
        )


# ---------------------------------------------------------------------------
# Criteria 5 and 6: scripted protocol run and deterministic exports
# ---------------------------------------------------------------------------

def _mock_backends():
    return (
        ModelDescriptor("m-template-a", "mock://template", "Template A"),
        ModelDescriptor("m-template-b", "mock://template", "Template B"),
        ModelDescriptor("m-fixed-1", "mock://fixed?text=Fixed+question+one%3F", "Fixed 1"),
        ModelDescriptor("m-fixed-2", "mock://fixed?text=Fixed+question+two%3F", "Fixed 2"),
        ModelDescriptor("m-fixed-3", "mock://fixed?text=Fixed+question+three%3F", "Fixed 3"),
        ModelDescriptor("m-fixed-4", "mock://fixed?text=Fixed+question+four%3F", "Fixed 4"),
        ModelDescriptor("m-slow", "mock://fixed?text=Late%3F&delay_ms=5000", "Slow"),
    )


def _scripted_run(root):
    material_dir = root / "materials"
    material_dir.mkdir(parents=True)
    words = [f"word{i:02d}" for i in range(40)]
    (material_dir / "liberty.txt").write_text(" ".join(words), encoding="utf-8")
    (material_dir / "topics.json").write_text(
        json.dumps(
            [
                {
                    "id": "liberty",
                    "title": "Liberty",
                    "source_uri": "test://liberty",
                    "file": "liberty.txt",
                }
            ]
        ),
        encoding="utf-8",
    )
    store_path = root / "records.jsonl"
    config = Config(
        backends=_mock_backends(),
        deadline_ms=60,
        overhead_ms=50,
        store_path=str(store_path),
        material_dir=str(material_dir),
    )
    ticks = itertools.count()
    clock = lambda: TS0 + timedelta(seconds=next(ticks))
    orchestrator, store, app = build_platform(
        config, clock=clock, session_id_factory=lambda: "sess-0001"
    )
    client = TestClient(app)

    created = client.post(
        "/sessions", json={"annotator_id": "teacher-1", "topic_id": "liberty"}
    )
    assert created.status_code == 201
    session_id = created.json()["session_id"]
    text = client.get("/topics/liberty/material").json()["text"]

    accepted = 0
    judged = 0
    reasons = [
        {"category": "Disfluent", "subtype": "Repetition"},
        {"category": "WrongContext", "subtype": "RevealsAnswer"},
    ]
    for word in words[:8]:
        start = text.index(word)
        batch = client.post(
            f"/sessions/{session_id}/concepts",
            json={"char_start": start, "char_end": start + len(word)},
        )
        assert batch.status_code == 200
        payload = batch.json()
        assert len(payload["candidates"]) == 5
        assert payload["excluded_count"] == 1
        texts = [c["text"] for c in payload["candidates"]]
        assert MOCK_TEMPLATE.format(answer=word) in texts
        for index in range(5):
            verdict = "Accept" if index < 3 else "Reject"
            body = {"presentation_index": index, "verdict": verdict}
            if verdict == "Reject":
                body["reason"] = reasons[index - 3]
            response = client.post(f"/sessions/{session_id}/judgments", json=body)
            assert response.status_code == 201
            judged += 1
            accepted += verdict == "Accept"

    final = client.post(f"/sessions/{session_id}/finalize")
    assert final.status_code == 200
    assert len(final.json()["accepted"]) == accepted
    assert "quiz_too_large" in [w["code"] for w in final.json()["warnings"]]
    store.close()
    return store_path, accepted, judged


def test_scripted_protocol_run(criteria, tmp_path, capsys):
    with criterion(criteria, "protocol-and-state-machine") as info:
        store_path, accepted, judged = _scripted_run(tmp_path / "run")
        assert judged == 8 * 5
        assert accepted == 24

        code = cli_main(
            ["analyze", "acceptance", "--records", str(store_path), "--format", "json"]
        )
        out = capsys.readouterr().out
        assert code == 0
        summary = json.loads(out)
        assert summary["record_count"] == judged
        assert summary["overall_rate"] == accepted / judged

        request = GenerationRequest(
            context="timing probe", answer="statue", max_new_tokens=30, request_id="t-0"
        )
        deadline_ms, epsilon_ms = 40, 50
        bound = (deadline_ms + epsilon_ms) / 1000.0
        worst = 0.0
        for _ in range(100):
            begin = time.perf_counter()
            results = fan_out(
                _mock_backends(), request, deadline_ms=deadline_ms, overhead_ms=epsilon_ms
            )
            wall = time.perf_counter() - begin
            worst = max(worst, wall)
            assert len(results) == 7
            assert wall <= bound

        info["detail"] = (
            f"8 concepts x 5 judged over REST, accept ratio {accepted}/{judged} "
            f"reproduced by analyze acceptance, fan_out wall <= "
            f"{bound * 1000:.0f}ms in 100 runs (worst {worst * 1000:.1f}ms)"
        )


def test_deterministic_exports(criteria, tmp_path):
    with criterion(criteria, "deterministic-exports") as info:
        first, _, _ = _scripted_run(tmp_path / "one")
        second, _, _ = _scripted_run(tmp_path / "two")
        bytes_first = first.read_bytes()
        bytes_second = second.read_bytes()
        assert bytes_first
        assert bytes_first == bytes_second
        assert len(bytes_first.splitlines()) == 40

        info["detail"] = (
            f"two scripted runs exported {len(bytes_first)} identical bytes "
            "(40 records, injected clock and session ids)"
        )
