"""Shared tokenizer and sentence splitter.

Every token-based metric and statistic in this package uses the same
tokenizer, so numbers are comparable across metrics even though they will
not bit-match any particular external tool.
"""
from __future__ import annotations

import re

# A token is a maximal run of letters/digits, optionally with one internal
# apostrophe ("don't" stays a single token). Underscore is excluded from \w.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)?", re.UNICODE)

# Trailing abbreviations that must not end a sentence.
_ABBREVIATIONS = ("dr.", "mr.", "mrs.", "e.g.", "i.e.", "etc.", "fig.",
                  "eq.", "vs.")

# Sentence boundary: terminal punctuation, whitespace, then an uppercase
# letter, digit, or opening quote.
_BOUNDARY_RE = re.compile(r"[.?!]+[\"')\]]*\s+(?=[A-Z0-9\"'“‘(])")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; deterministic and punctuation-stripping."""
    return _TOKEN_RE.findall(text.lower())


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def segment_sentences(text: str) -> list[str]:
    """Split prose into sentences with a rule-based boundary detector.

    Splits after [.?!] followed by whitespace and an uppercase/quote/digit
    opener, guarded against a short abbreviation list and decimal numbers.
    Joining the result with single spaces reproduces the whitespace-
    normalized input.
    """
    if not text.strip():
        return []
    normalized = normalize_whitespace(text)
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(normalized):
        candidate = normalized[start:match.end()].rstrip()
        if _ends_with_abbreviation(candidate):
            continue
        sentences.append(candidate)
        start = match.end()
    tail = normalized[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _ends_with_abbreviation(fragment: str) -> bool:
    lowered = fragment.lower()
    return any(lowered.endswith(abbr) for abbr in _ABBREVIATIONS)
