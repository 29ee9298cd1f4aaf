"""Dialogue values: ordered question-answer pairs plus provenance metadata,
with transcript rendering/parsing and the turn cap."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptyUtterance, InvalidTurnCap, NoPairsFound

logger = logging.getLogger(__name__)


class Strategy(str, Enum):
    PERSONA_DUAL = "persona-dual"
    PERSONA_SINGLE = "persona-single"
    INPAINTING = "inpainting"
    QGQA = "qgqa"


@dataclass(frozen=True)
class QAPair:
    index: int  # 1-based turn-pair index t
    question: str
    answer: str


@dataclass(frozen=True)
class DialogueMeta:
    book_id: str = ""
    chapter_index: int = 0
    section_id: str = ""
    strategy: str = ""
    info_level: str = ""
    seed: int = 0
    dialogue_id: str = ""


@dataclass(frozen=True)
class Dialogue:
    pairs: tuple[QAPair, ...] = ()
    meta: DialogueMeta = field(default_factory=DialogueMeta)

    def __len__(self) -> int:
        return len(self.pairs)


def append_pair(dialogue: Dialogue, question: str, answer: str) -> Dialogue:
    """Return a new dialogue with (question, answer) appended at index n+1."""
    question = question.strip()
    answer = answer.strip()
    if not question:
        raise EmptyUtterance("question is empty after trim")
    if not answer:
        raise EmptyUtterance("answer is empty after trim")
    pair = QAPair(index=len(dialogue.pairs) + 1, question=question, answer=answer)
    return replace(dialogue, pairs=dialogue.pairs + (pair,))


def render_history(dialogue: Dialogue) -> str:
    """Render alternating "Student:"/"Teacher:" lines in pair order."""
    lines = []
    for pair in dialogue.pairs:
        lines.append(f"Student: {pair.question}")
        lines.append(f"Teacher: {pair.answer}")
    return "\n".join(lines)


# Speaker labels are matched case-insensitively, tolerating leading
# whitespace and bullet markers; utterances may span lines.
_LABEL_RE = re.compile(r"(?:(?<=^)|(?<=\n)|(?<=\s))[ \t]*[-*•]?[ \t]*"
                       r"(student|teacher)[ \t]*:", re.IGNORECASE)


def parse_transcript(text: str) -> list[tuple[str, str]]:
    """Extract (question, answer) pairs from a labeled transcript.

    A trailing student utterance with no teacher reply is dropped with a
    warning. Raises NoPairsFound when no pair can be formed.
    """
    matches = list(_LABEL_RE.finditer(text))
    utterances: list[tuple[str, str]] = []
    for i, match in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        content = text[match.end():end].strip()
        if content:
            utterances.append((match.group(1).lower(), content))

    pairs: list[tuple[str, str]] = []
    pending_question: str | None = None
    for role, content in utterances:
        if role == "student":
            pending_question = content
        elif pending_question is not None:
            pairs.append((pending_question, content))
            pending_question = None
    if pending_question is not None:
        logger.warning("dropping trailing unanswered student utterance: %.60s",
                       pending_question)
    if not pairs:
        raise NoPairsFound("no (student, teacher) pair found in transcript")
    return pairs


def truncate_pairs(dialogue: Dialogue, max_turns: int) -> Dialogue:
    """Keep at most max_turns/2 pairs (a question and an answer each count
    as one turn)."""
    if max_turns % 2 != 0 or max_turns < 2:
        raise InvalidTurnCap(f"max_turns must be even and >= 2, got {max_turns}")
    cap = max_turns // 2
    if len(dialogue.pairs) <= cap:
        return dialogue
    return replace(dialogue, pairs=dialogue.pairs[:cap])


def dialogue_to_dict(dialogue: Dialogue) -> dict:
    return {
        "meta": {
            "dialogue_id": dialogue.meta.dialogue_id,
            "book_id": dialogue.meta.book_id,
            "chapter_index": dialogue.meta.chapter_index,
            "section_id": dialogue.meta.section_id,
            "strategy": dialogue.meta.strategy,
            "info_level": dialogue.meta.info_level,
            "seed": dialogue.meta.seed,
        },
        "pairs": [{"t": p.index, "q": p.question, "a": p.answer}
                  for p in dialogue.pairs],
    }


def dialogue_from_dict(data: dict) -> Dialogue:
    meta_raw = data.get("meta", {})
    meta = DialogueMeta(
        book_id=meta_raw.get("book_id", ""),
        chapter_index=meta_raw.get("chapter_index", 0),
        section_id=meta_raw.get("section_id", ""),
        strategy=meta_raw.get("strategy", ""),
        info_level=meta_raw.get("info_level", ""),
        seed=meta_raw.get("seed", 0),
        dialogue_id=meta_raw.get("dialogue_id", ""),
    )
    pairs = tuple(QAPair(index=p["t"], question=p["q"], answer=p["a"])
                  for p in data.get("pairs", []))
    return Dialogue(pairs=pairs, meta=meta)


def write_jsonl(dialogues: Iterable[Dialogue], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in dialogues:
            fh.write(json.dumps(dialogue_to_dict(dialogue), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> Iterator[Dialogue]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield dialogue_from_dict(json.loads(line))
