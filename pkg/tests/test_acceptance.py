"""Acceptance suite: one test per release criterion, each printing a
PASS line (visible with pytest -s or in the captured output)."""
import json
import math
import os
import random
import time

import pytest
from click.testing import CliRunner

from book2dialogue import load_bundled_minibook
from book2dialogue.cli import main as cli_main
from book2dialogue.corpus import InfoLevel
from book2dialogue.dialogue import Dialogue, Strategy, append_pair, read_jsonl
from book2dialogue.metrics import (bf1, coherence, corpus_bleu,
                                   extractive_stats, find_fragments,
                                   informativeness, qfactscore,
                                   teacher_coverage)
from book2dialogue.analytics import (bigram_entropy, length_stats, pearson,
                                     question_type_stats, spearman)
from book2dialogue.providers import MockProviderSet, QAResult
from book2dialogue.synthesis import SynthesisConfig, synthesize
from book2dialogue.text import segment_sentences, normalize_whitespace

BOOK = load_bundled_minibook()


def make_dialogue(*pairs):
    d = Dialogue()
    for q, a in pairs:
        d = append_pair(d, q, a)
    return d


def report(n, text):
    print(f"PASS criterion {n}: {text}")


def oracle_fragments(source, stream):
    fragments = []
    i = 0
    while i < len(stream):
        best_len, best_j = 0, -1
        for j in range(len(source)):
            length = 0
            while (i + length < len(stream) and j + length < len(source)
                   and stream[i + length] == source[j + length]):
                length += 1
            if length > best_len:
                best_len, best_j = length, j
        if best_len >= 1:
            fragments.append((tuple(stream[i:i + best_len]), i, best_j))
            i += best_len
        else:
            i += 1
    return fragments


def test_criterion_1_fragment_oracle_equivalence():
    rng = random.Random(20240815)
    start = time.monotonic()
    for _ in range(1000):
        source = [rng.choice("abcde") for _ in range(rng.randint(0, 20))]
        stream = [rng.choice("abcde") for _ in range(rng.randint(0, 20))]
        got = find_fragments(source, stream)
        want = oracle_fragments(source, stream)
        assert [(f.tokens, f.dialogue_start, f.source_start)
                for f in got] == want
        if stream:
            density = sum(len(f) ** 2 for f in got) / len(stream)
            coverage = sum(len(f) for f in got) / len(stream)
            oracle_density = sum(len(f[0]) ** 2 for f in want) / len(stream)
            oracle_coverage = sum(len(f[0]) for f in want) / len(stream)
            assert density == oracle_density
            assert coverage == oracle_coverage
            assert density >= coverage
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    report(1, f"1000 random fragment cases match the brute-force oracle "
              f"exactly in {elapsed:.2f}s")


def test_criterion_2_copy_teacher_groundedness():
    config = SynthesisConfig(strategy=Strategy.INPAINTING, seed=0)
    for _, section in BOOK.iter_sections():
        dialogue = synthesize(section, config, MockProviderSet(seed=0))
        sentences = segment_sentences(section.content)
        for k, pair in enumerate(dialogue.pairs):
            assert pair.answer == sentences[k]  # verbatim, increasing order
        assert teacher_coverage(section.content, dialogue) == 1.0
    report(2, "inpainting teacher answers are verbatim source sentences in "
              "order; teacher-only coverage = 1.0 on all 7 sections")


def test_criterion_3_turn_cap_compliance():
    count = 0
    for strategy in Strategy:
        config = SynthesisConfig(strategy=strategy, info_level=InfoLevel.HIGH,
                                 max_turns=12, seed=1)
        for _, section in BOOK.iter_sections():
            dialogue = synthesize(section, config, MockProviderSet(seed=1))
            assert len(dialogue.pairs) <= 6
            count += 1
    report(3, f"all {count} synthesized dialogues have <= 6 pairs at "
              f"max_turns=12")


def test_criterion_4_bf1_hand_fixtures():
    ortho = MockProviderSet(embedding_mode="orthogonal")
    value = bf1(ortho.embed_tokens("a b"), ortho.embed_tokens("a c"))
    assert value == pytest.approx(0.5, abs=1e-9)
    same = bf1(ortho.embed_tokens("x y z"), ortho.embed_tokens("x y z"))
    assert same == pytest.approx(1.0, abs=1e-9)
    # multi-reference max rule: q3 equals a1 though a2 is disjoint
    d = make_dialogue(("s", "alpha beta"), ("n", "gamma delta"),
                      ("alpha beta", "omega"))
    assert coherence(d, "all", ortho)[2] == pytest.approx(1.0, abs=1e-9)
    report(4, "BF1 = 0.5 on the [a,b]/[a,c] fixture, 1.0 on identical texts, "
              "max-rule coherence fixture = 1.0")


def test_criterion_5_informativeness_identities():
    duplicate = make_dialogue(("q1", "same words"), ("q2", "same words"))
    assert informativeness(duplicate)[1] == 0.0
    disjoint = make_dialogue(("q1", "alpha beta"), ("q2", "gamma delta"))
    assert informativeness(disjoint)[1] == 1.0
    assert informativeness(make_dialogue(("q", "anything")))[0] == 1.0
    report(5, "informativeness identities exact: duplicate 0.0, disjoint 1.0, "
              "first pair 1.0")


def test_criterion_6_qfactscore():
    perfect = MockProviderSet(qa_responses={
        "the answer": QAResult(answer="the answer", confidence=0.9)})
    d = make_dialogue(("the answer", "the answer"))
    assert qfactscore(d, "src", perfect)[0] == pytest.approx(2.0, abs=1e-9)

    unanswerable = MockProviderSet(qa_mode="never")
    d2 = make_dialogue(("same text", "same text"))
    assert qfactscore(d2, "src", unanswerable)[0] == pytest.approx(1.0,
                                                                   abs=1e-9)

    rng = random.Random(6)
    mock = MockProviderSet(seed=6)
    source = "alpha beta gamma delta. Epsilon zeta eta theta."
    for _ in range(1000):
        q = " ".join(rng.choices(["alpha", "beta", "gamma", "delta", "zz"],
                                 k=rng.randint(1, 5)))
        a = " ".join(rng.choices(["epsilon", "zeta", "eta", "theta", "yy"],
                                 k=rng.randint(1, 5)))
        alpha = rng.uniform(0, 3)
        beta = rng.uniform(0, 3)
        d3 = make_dialogue((q, a))
        value = qfactscore(d3, source, mock, alpha=alpha, beta=beta)[0]
        assert abs(value) <= alpha + beta + 1e-9
        doubled = qfactscore(d3, source, mock, alpha=2 * alpha,
                             beta=2 * beta)[0]
        assert doubled == pytest.approx(2 * value, abs=1e-12)
    report(6, "qfactscore trivial cases 2.0/1.0 exact; linearity to 1e-12 and "
              "|score| <= alpha+beta on 1000 random cases")


def brute_force_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x)
                    * sum((b - my) ** 2 for b in y))
    return num / den


def brute_force_ranks(values):
    ranks = []
    for v in values:
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks.append(less + (equal + 1) / 2.0)
    return ranks


def test_criterion_7_correlation_oracle():
    rng = random.Random(7)
    checked = 0
    while checked < 100:
        n = rng.randint(3, 50)
        x = [float(rng.randint(0, 6)) for _ in range(n)]  # ties likely
        y = [float(rng.randint(0, 6)) for _ in range(n)]
        if len(set(x)) == 1 or len(set(y)) == 1:
            continue
        assert pearson(x, y).coefficient == pytest.approx(
            brute_force_pearson(x, y), abs=1e-12)
        rx, ry = brute_force_ranks(x), brute_force_ranks(y)
        assert spearman(x, y).coefficient == pytest.approx(
            brute_force_pearson(rx, ry), abs=1e-12)
        checked += 1

    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]).coefficient \
        == pytest.approx(0.8, abs=1e-12)
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]).coefficient \
        == pytest.approx(0.8, abs=1e-12)

    x = [rng.random() for _ in range(25)]
    y = [rng.random() for _ in range(25)]
    base = pearson(x, y).coefficient
    assert pearson([4 * v + 7 for v in x], y).coefficient \
        == pytest.approx(base, abs=1e-12)
    assert pearson([-v for v in x], y).coefficient \
        == pytest.approx(-base, abs=1e-12)
    s_base = spearman(x, y).coefficient
    assert spearman([math.exp(v) for v in x], y).coefficient \
        == pytest.approx(s_base, abs=1e-12)
    report(7, "pearson/spearman match brute-force oracles to 1e-12 on 100 "
              "random vectors with ties; hand fixture r = rho = 0.8")


def test_criterion_8_statistics_fixture():
    # hand sheet: 3 dialogues
    # d1: q="What is a wave?" (4 tok), a="A wave moves energy." (4 tok)
    #     q="How much is lost?" (4 tok), a="Very little energy." (3 tok)
    # d2: q="Why do waves bend?" (4 tok), a="Refraction bends them." (3 tok)
    # d3: q="How does light travel?" (4 tok), a="a b a b" (4 tok)
    d1 = make_dialogue(("What is a wave?", "A wave moves energy."),
                       ("How much is lost?", "Very little energy."))
    d2 = make_dialogue(("Why do waves bend?", "Refraction bends them."))
    d3 = make_dialogue(("How does light travel?", "a b a b"))
    dialogues = [d1, d2, d3]

    pct = question_type_stats(dialogues)
    # hand count over 4 questions: what: 1 -> 25%; why: 1 -> 25%;
    # how (excluding "how much"): 1 -> 25%
    assert pct == {"what_which": 25.0, "why": 25.0, "how": 25.0}

    avg_q, avg_a, avg_u = length_stats(dialogues)
    assert avg_q == 4.0           # (4+4+4+4)/4
    assert avg_a == 3.5           # (4+3+3+4)/4
    assert avg_u == 3.75          # (16+14)/8

    # entropy of "a b a b" alone: p(ab)=2/3, p(ba)=1/3 -> 0.9183 bits
    assert bigram_entropy([make_dialogue(("a b a b", "a b a b"))]) \
        == pytest.approx(0.9183, abs=1e-4)
    report(8, "question-type percentages, token averages, and the "
              "0.9183-bit entropy case match the hand sheet")


def test_criterion_9_bleu():
    texts = ["the quick brown fox jumps over", "a second reference sentence"]
    assert corpus_bleu(texts, texts) == 100.0
    assert corpus_bleu(["a b c d"], ["a b c d e"]) \
        == pytest.approx(77.88, abs=0.01)
    assert corpus_bleu(["a b c d"], ["w x y z"]) == 0.0
    report(9, "BLEU: identical corpus 100.0, brevity fixture 77.88, "
              "zero-overlap 0.0")


def test_criterion_10_end_to_end_determinism(tmp_path):
    runner = CliRunner()
    start = time.monotonic()
    outputs = {}
    for run_id in ("a", "b"):
        for strategy in ("persona-dual", "persona-single", "inpainting",
                         "qgqa"):
            out = tmp_path / run_id / strategy
            result = runner.invoke(cli_main, [
                "synthesize", "--mock", "--strategy", strategy,
                "--info-level", "high", "--seed", "42", "-o", str(out)])
            assert result.exit_code == 0, result.output
            dataset = out / f"dialogues-{strategy}.jsonl"
            reports = out / "reports"
            result = runner.invoke(cli_main, [
                "evaluate", str(dataset), "--mock", "-o", str(reports)])
            assert result.exit_code == 0, result.output
            outputs[(run_id, strategy)] = (
                dataset.read_bytes(), (reports / "metrics.csv").read_bytes())
    elapsed = time.monotonic() - start
    for strategy in ("persona-dual", "persona-single", "inpainting", "qgqa"):
        assert outputs[("a", strategy)] == outputs[("b", strategy)]
    assert elapsed < 60.0
    report(10, f"synthesize+evaluate for all four strategies twice in "
               f"{elapsed:.1f}s with byte-identical JSONL and CSV")


def test_criterion_11_information_asymmetry_audit():
    total = 0
    for level in (InfoLevel.LOW, InfoLevel.MEDIUM, InfoLevel.HIGH):
        config = SynthesisConfig(strategy=Strategy.PERSONA_DUAL,
                                 info_level=level, seed=2)
        for _, section in BOOK.iter_sections():
            audit = []
            synthesize(section, config, MockProviderSet(seed=2),
                       student_prompt_audit=audit)
            sentences = [normalize_whitespace(s)
                         for s in segment_sentences(section.content)]
            for prompt in audit:
                normalized = normalize_whitespace(prompt)
                for sentence in sentences:
                    assert sentence not in normalized
                total += 1
    report(11, f"none of {total} student prompts at low/medium/high contains "
               f"a content sentence")


@pytest.mark.skipif(os.environ.get("B2D_LIVE") != "1",
                    reason="opt-in live check; set B2D_LIVE=1 with real "
                           "provider credentials")
def test_criterion_12_live_coverage_ordering():
    # Directional check with real providers on one section: the copy-teacher
    # strategy must ground more text than persona role-play.
    from book2dialogue.cli import _build_providers
    cfg = {
        "chat_url": os.environ["B2D_CHAT_URL"],
        "embeddings_url": os.environ.get("B2D_EMBEDDINGS_URL", ""),
        "qa_url": os.environ.get("B2D_QA_URL", ""),
        "chat_model": os.environ.get("B2D_CHAT_MODEL", ""),
    }
    providers = _build_providers(cfg, mock=False, seed=0, verbose=False)
    section = BOOK.chapters[0].sections[0]
    inpaint = synthesize(section, SynthesisConfig(
        strategy=Strategy.INPAINTING, seed=0), providers)
    persona = synthesize(section, SynthesisConfig(
        strategy=Strategy.PERSONA_DUAL, info_level=InfoLevel.HIGH, seed=0),
        providers)
    cov_inpaint = extractive_stats(section.content, inpaint)["coverage"]
    cov_persona = extractive_stats(section.content, persona)["coverage"]
    assert cov_inpaint > cov_persona
    report(12, f"live coverage ordering holds: inpainting {cov_inpaint:.2f} "
               f"> persona-dual-high {cov_persona:.2f}")
