"""Dataset-level statistics and metric-validation correlations."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Sequence

from scipy.special import betainc

from .dialogue import Dialogue
from .errors import (ConstantInput, EmptyDataset, JoinError, LengthMismatch,
                     NoBigrams)
from .text import tokenize


@dataclass(frozen=True)
class DatasetStats:
    n_dialogues: int
    n_pairs: int
    pct_what_which: float
    pct_why: float
    pct_how: float
    avg_tokens_question: float
    avg_tokens_answer: float
    avg_words_per_utterance: float
    bigram_entropy_bits: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AnnotationRecord:
    dialogue_id: str
    pair_index: int
    criterion: str
    human_score: int  # annotators answer yes (1) / no (0)


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int


def _all_questions(dialogues: Sequence[Dialogue]) -> list[str]:
    return [p.question for d in dialogues for p in d.pairs]


def question_type_stats(dialogues: Sequence[Dialogue]) -> dict[str, float]:
    """Percentages of questions containing what/which, why, and how.

    Buckets are non-exclusive. A "how" immediately followed by "much" or
    "many" does not count (those ask for factual quantities).
    """
    questions = _all_questions(dialogues)
    if not questions:
        raise EmptyDataset("no questions in dataset")
    counts = {"what_which": 0, "why": 0, "how": 0}
    for question in questions:
        tokens = tokenize(question)
        if "what" in tokens or "which" in tokens:
            counts["what_which"] += 1
        if "why" in tokens:
            counts["why"] += 1
        for i, token in enumerate(tokens):
            if token == "how":
                follower = tokens[i + 1] if i + 1 < len(tokens) else ""
                if follower not in ("much", "many"):
                    counts["how"] += 1
                    break
    total = len(questions)
    return {bucket: 100.0 * count / total for bucket, count in counts.items()}


def length_stats(dialogues: Sequence[Dialogue]) -> tuple[float, float, float]:
    """(avg tokens per question, avg tokens per answer, avg per utterance)."""
    question_lengths = []
    answer_lengths = []
    for dialogue in dialogues:
        for pair in dialogue.pairs:
            question_lengths.append(len(tokenize(pair.question)))
            answer_lengths.append(len(tokenize(pair.answer)))
    if not question_lengths:
        raise EmptyDataset("no pairs in dataset")
    avg_q = sum(question_lengths) / len(question_lengths)
    avg_a = sum(answer_lengths) / len(answer_lengths)
    all_lengths = question_lengths + answer_lengths
    avg_u = sum(all_lengths) / len(all_lengths)
    return avg_q, avg_a, avg_u


def bigram_entropy(dialogues: Sequence[Dialogue]) -> float:
    """Shannon entropy (bits) of the within-utterance token bigram
    distribution across the dataset."""
    counts: Counter = Counter()
    for dialogue in dialogues:
        for pair in dialogue.pairs:
            for utterance in (pair.question, pair.answer):
                tokens = tokenize(utterance)
                counts.update(zip(tokens, tokens[1:]))
    total = sum(counts.values())
    if total == 0:
        raise NoBigrams("no within-utterance bigram in dataset")
    return -sum((c / total) * math.log2(c / total) for c in counts.values())


def dataset_stats(dialogues: Sequence[Dialogue]) -> DatasetStats:
    dialogues = list(dialogues)
    n_pairs = sum(len(d.pairs) for d in dialogues)
    if n_pairs == 0:
        raise EmptyDataset("dataset has no QA pairs")
    pct = question_type_stats(dialogues)
    avg_q, avg_a, avg_u = length_stats(dialogues)
    try:
        entropy = bigram_entropy(dialogues)
    except NoBigrams:
        entropy = 0.0
    return DatasetStats(
        n_dialogues=len(dialogues),
        n_pairs=n_pairs,
        pct_what_which=pct["what_which"],
        pct_why=pct["why"],
        pct_how=pct["how"],
        avg_tokens_question=avg_q,
        avg_tokens_answer=avg_a,
        avg_words_per_utterance=avg_u,
        bigram_entropy_bits=entropy,
    )


def render_stats_table(stats: DatasetStats) -> str:
    rows = [
        ("Dialogues", f"{stats.n_dialogues}"),
        ("QA pairs", f"{stats.n_pairs}"),
        ("What/Which (%)", f"{stats.pct_what_which:.2f}"),
        ("Why (%)", f"{stats.pct_why:.2f}"),
        ("How (%)", f"{stats.pct_how:.2f}"),
        ("Avg tokens / question", f"{stats.avg_tokens_question:.2f}"),
        ("Avg tokens / answer", f"{stats.avg_tokens_answer:.2f}"),
        ("Avg words / utterance", f"{stats.avg_words_per_utterance:.2f}"),
        ("Bigram entropy (bits)", f"{stats.bigram_entropy_bits:.4f}"),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


# ---------------------------------------------------------------------------
# Correlations
# ---------------------------------------------------------------------------

def _check_inputs(x: Sequence[float], y: Sequence[float]):
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)}")
    if len(x) < 3:
        raise LengthMismatch("need n >= 3 for a defined p-value")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise ConstantInput("correlation undefined for constant input")


def _t_test_p(r: float, n: int) -> float:
    """Two-tailed p for the correlation t statistic with n-2 dof, via the
    regularized incomplete beta function."""
    if abs(r) >= 1.0:
        return 0.0
    dof = n - 2
    t_sq = r * r * dof / (1.0 - r * r)
    # P(|T| >= t) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t_sq)))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Sample Pearson correlation with a two-tailed t-test p-value."""
    _check_inputs(x, y)
    n = len(x)
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    cov = sum(a * b for a, b in zip(dx, dy))
    var_x = sum(a * a for a in dx)
    var_y = sum(b * b for b in dy)
    r = cov / math.sqrt(var_x * var_y)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(coefficient=r, p_value=_t_test_p(r, n), n=n)


def rank_with_ties(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties assigned the average of their rank positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Spearman rank correlation: Pearson over average-tie ranks."""
    _check_inputs(x, y)
    return pearson(rank_with_ties(x), rank_with_ties(y))


# ---------------------------------------------------------------------------
# Annotation ingest and join
# ---------------------------------------------------------------------------

def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"dialogue_id", "pair_index", "criterion", "human_score"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise JoinError([], f"annotation CSV must have columns {sorted(required)}")
        for row in reader:
            score = int(row["human_score"])
            if score not in (0, 1):
                raise JoinError([], f"human_score must be 0 or 1, got {score}")
            records.append(AnnotationRecord(
                dialogue_id=row["dialogue_id"],
                pair_index=int(row["pair_index"]),
                criterion=row["criterion"],
                human_score=score,
            ))
    return records


def join_annotations(records: Iterable[AnnotationRecord],
                     reports: dict[str, dict],
                     metric: str, criterion: str) -> tuple[list[float], list[float]]:
    """Pair human scores with per-pair metric values by (dialogue_id,
    pair_index). Unmatched rows are an error, never silently dropped."""
    human: list[float] = []
    scores: list[float] = []
    unmatched = []
    for record in records:
        if record.criterion != criterion:
            continue
        report = reports.get(record.dialogue_id)
        value = None
        if report is not None:
            values = report.get("per_pair", {}).get(metric, [])
            if 1 <= record.pair_index <= len(values):
                value = values[record.pair_index - 1]
        if value is None:
            unmatched.append((record.dialogue_id, record.pair_index))
            continue
        human.append(float(record.human_score))
        scores.append(float(value))
    if unmatched:
        raise JoinError(unmatched)
    return scores, human
