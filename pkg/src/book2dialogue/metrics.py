"""Automatic dialogue-quality metrics: greedy embedding-match F1 (relevance
and coherence), answer-overlap informativeness, extractive fragment density
and coverage, answerability, the weighted QA/question-answer similarity
score, and corpus BLEU-4."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dialogue import Dialogue
from .errors import EmptyTokenList, LengthMismatch
from .providers import EmbeddingVector, ProviderSet
from .text import tokenize

QFACT_ALPHA = 1.0
QFACT_BETA = 1.0

METRIC_COLUMNS = ("answer_relevance_bf1", "coherence_prev", "coherence_all",
                  "informativeness", "density", "coverage", "answerability",
                  "qfactscore")


@dataclass(frozen=True)
class Fragment:
    """A maximal token run shared between the dialogue stream and the source."""

    tokens: tuple[str, ...]
    dialogue_start: int
    source_start: int

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class MetricReport:
    dialogue_id: str
    per_pair: dict[str, list[float | None]] = field(default_factory=dict)
    per_dialogue: dict[str, float | None] = field(default_factory=dict)

    def add(self, name: str, values: list[float | None]):
        self.per_pair[name] = values
        defined = [v for v in values if v is not None]
        self.per_dialogue[name] = (sum(defined) / len(defined)) if defined else None

    def to_dict(self) -> dict:
        return {"dialogue_id": self.dialogue_id,
                "per_pair": self.per_pair,
                "per_dialogue": self.per_dialogue}


# ---------------------------------------------------------------------------
# Greedy embedding-matching F1
# ---------------------------------------------------------------------------

def bf1(candidate: Sequence[EmbeddingVector],
        reference: Sequence[EmbeddingVector]) -> float:
    """Greedy-matching F1 over token embeddings.

    Precision: mean over candidate tokens of the max cosine to any reference
    token; recall symmetric. No IDF weighting, no baseline rescaling.
    """
    if not candidate or not reference:
        raise EmptyTokenList("candidate and reference must be non-empty")
    precision = sum(max(c.cosine(r) for r in reference) for c in candidate)
    precision /= len(candidate)
    recall = sum(max(r.cosine(c) for c in candidate) for r in reference)
    recall /= len(reference)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _bf1_texts(providers: ProviderSet, a: str, b: str) -> float:
    return bf1(providers.embed_tokens(a), providers.embed_tokens(b))


def answer_relevance(dialogue: Dialogue,
                     providers: ProviderSet) -> list[float | None]:
    """BF1 of each question against its own answer."""
    return [_bf1_texts(providers, p.question, p.answer) for p in dialogue.pairs]


def coherence(dialogue: Dialogue, mode: str,
              providers: ProviderSet) -> list[float | None]:
    """BF1 of each question against preceding answers.

    mode="prev" scores against the immediately preceding answer; mode="all"
    takes the max over all preceding answers. The first pair has no
    predecessor and is undefined (None).
    """
    if mode not in ("prev", "all"):
        raise ValueError(f"mode must be 'prev' or 'all', got {mode!r}")
    values: list[float | None] = []
    for t, pair in enumerate(dialogue.pairs):
        if t == 0:
            values.append(None)
            continue
        if mode == "prev":
            values.append(_bf1_texts(providers, pair.question,
                                     dialogue.pairs[t - 1].answer))
        else:
            values.append(max(_bf1_texts(providers, pair.question, prev.answer)
                              for prev in dialogue.pairs[:t]))
    return values


# ---------------------------------------------------------------------------
# Informativeness: 1 - Jaccard(answer tokens, union of previous answers)
# ---------------------------------------------------------------------------

def informativeness(dialogue: Dialogue) -> list[float | None]:
    values: list[float | None] = []
    seen: set[str] = set()
    for pair in dialogue.pairs:
        current = set(tokenize(pair.answer))
        if not seen:
            values.append(1.0)  # empty previous union introduces everything
        else:
            union = current | seen
            intersection = current & seen
            overlap = len(intersection) / len(union) if union else 0.0
            values.append(1.0 - overlap)
        seen |= current
    return values


# ---------------------------------------------------------------------------
# Extractive fragments, density, coverage
# ---------------------------------------------------------------------------

def dialogue_token_stream(dialogue: Dialogue) -> list[str]:
    stream: list[str] = []
    for pair in dialogue.pairs:
        stream.extend(tokenize(pair.question))
        stream.extend(tokenize(pair.answer))
    return stream


def find_fragments(source_tokens: Sequence[str],
                   dialogue_tokens: Sequence[str]) -> list[Fragment]:
    """Greedy maximal-match scan over the dialogue token stream.

    At each cursor position, take the longest token run starting there that
    occurs contiguously in the source (earliest source offset on ties), emit
    it, and jump past it; positions with no match advance by one.
    """
    # Index source positions by token for fast candidate lookup.
    positions: dict[str, list[int]] = {}
    for j, token in enumerate(source_tokens):
        positions.setdefault(token, []).append(j)

    fragments: list[Fragment] = []
    i = 0
    n = len(dialogue_tokens)
    m = len(source_tokens)
    while i < n:
        best_len = 0
        best_src = -1
        for j in positions.get(dialogue_tokens[i], ()):
            length = 0
            while (i + length < n and j + length < m
                   and dialogue_tokens[i + length] == source_tokens[j + length]):
                length += 1
            if length > best_len:  # earliest offset wins ties
                best_len = length
                best_src = j
        if best_len >= 1:
            fragments.append(Fragment(
                tokens=tuple(dialogue_tokens[i:i + best_len]),
                dialogue_start=i, source_start=best_src))
            i += best_len
        else:
            i += 1
    return fragments


def extractive_stats(source: str, dialogue: Dialogue) -> dict:
    """Fragments plus density (mean squared fragment length per dialogue
    token) and coverage (fraction of dialogue tokens inside fragments)."""
    source_tokens = tokenize(source)
    dialogue_tokens = dialogue_token_stream(dialogue)
    fragments = find_fragments(source_tokens, dialogue_tokens)
    total = len(dialogue_tokens)
    if total == 0:
        return {"fragments": [], "density": 0.0, "coverage": 0.0}
    density = sum(len(f) ** 2 for f in fragments) / total
    coverage = sum(len(f) for f in fragments) / total
    return {"fragments": fragments, "density": density, "coverage": coverage}


def teacher_coverage(source: str, dialogue: Dialogue) -> float:
    """Coverage computed over teacher utterances alone."""
    source_tokens = tokenize(source)
    answer_tokens: list[str] = []
    for pair in dialogue.pairs:
        answer_tokens.extend(tokenize(pair.answer))
    if not answer_tokens:
        return 0.0
    fragments = find_fragments(source_tokens, answer_tokens)
    return sum(len(f) for f in fragments) / len(answer_tokens)


# ---------------------------------------------------------------------------
# Answerability and the weighted factual-consistency score
# ---------------------------------------------------------------------------

def answerability(dialogue: Dialogue, source: str,
                  providers: ProviderSet) -> tuple[list[bool], float]:
    flags = []
    for pair in dialogue.pairs:
        result = providers.extractive_qa(pair.question, source)
        flags.append(bool(result.answer))
    ratio = sum(flags) / len(flags) if flags else 0.0
    return flags, ratio


def qfactscore(dialogue: Dialogue, source: str, providers: ProviderSet,
               alpha: float = QFACT_ALPHA,
               beta: float = QFACT_BETA) -> list[float | None]:
    """alpha * cos(predicted answer, given answer) + beta * cos(question,
    given answer); the first term is 0 when the QA model finds no answer."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be >= 0")
    values: list[float | None] = []
    for pair in dialogue.pairs:
        answer_vec = providers.embed_sentence(pair.answer)
        qa_result = providers.extractive_qa(pair.question, source)
        if qa_result.answer:
            first = providers.embed_sentence(qa_result.answer).cosine(answer_vec)
        else:
            first = 0.0
        second = providers.embed_sentence(pair.question).cosine(answer_vec)
        values.append(alpha * first + beta * second)
    return values


# ---------------------------------------------------------------------------
# Corpus BLEU-4
# ---------------------------------------------------------------------------

def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU-4 in [0, 100] with corpus-pooled modified precisions and
    the standard brevity penalty; no smoothing (any zero precision gives 0)."""
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise LengthMismatch("inputs must be non-empty")

    cand_len = 0
    ref_len = 0
    matches = [0] * 4
    totals = [0] * 4
    for cand_text, ref_text in zip(candidates, references):
        cand = tokenize(cand_text)
        ref = tokenize(ref_text)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_counts = _ngram_counts(cand, n)
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(min(count, ref_counts[gram])
                                  for gram, count in cand_counts.items())

    if cand_len == 0:
        return 0.0
    if any(t == 0 or m == 0 for m, t in zip(matches, totals)):
        return 0.0
    log_sum = sum(0.25 * math.log(m / t) for m, t in zip(matches, totals))
    brevity = min(1.0, math.exp(1.0 - ref_len / cand_len))
    return 100.0 * brevity * math.exp(log_sum)


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

# Optional hook for externally computed per-pair scores (e.g. metric models
# outside this package): takes (question, answer) and returns a real.
ExternalPairScorer = Callable[[str, str], float]


def evaluate_dialogue(dialogue: Dialogue, source: str,
                      providers: ProviderSet | None, *,
                      alpha: float = QFACT_ALPHA, beta: float = QFACT_BETA,
                      external_scorers: dict[str, ExternalPairScorer] | None = None,
                      ) -> MetricReport:
    """Compute all metrics for one dialogue.

    With ``providers=None`` (offline), only the provider-free metrics are
    filled: informativeness, density, coverage.
    """
    report = MetricReport(dialogue_id=dialogue.meta.dialogue_id)
    report.add("informativeness", informativeness(dialogue))
    stats = extractive_stats(source, dialogue)
    report.per_pair["density"] = []
    report.per_pair["coverage"] = []
    report.per_dialogue["density"] = stats["density"]
    report.per_dialogue["coverage"] = stats["coverage"]

    if providers is not None:
        report.add("answer_relevance_bf1", answer_relevance(dialogue, providers))
        report.add("coherence_prev", coherence(dialogue, "prev", providers))
        report.add("coherence_all", coherence(dialogue, "all", providers))
        flags, ratio = answerability(dialogue, source, providers)
        report.per_pair["answerability"] = [1.0 if f else 0.0 for f in flags]
        report.per_dialogue["answerability"] = ratio
        report.add("qfactscore",
                   qfactscore(dialogue, source, providers, alpha, beta))

    for name, scorer in (external_scorers or {}).items():
        report.add(name, [scorer(p.question, p.answer) for p in dialogue.pairs])
    return report
