"""German text tokenisation and length filtering."""

from __future__ import annotations

from typing import Sequence, TypeVar

PUNCTUATION = frozenset('.,!?;:"()«»-')

R = TypeVar("R")


def tokenize_german(sentence: str) -> list[str]:
    """Whitespace split, then peel leading/trailing punctuation into single-char tokens.

    >>> tokenize_german("Die -.")
    ['Die', '-', '.']
    """
    tokens: list[str] = []
    for word in sentence.split():
        start, end = 0, len(word)
        while start < end and word[start] in PUNCTUATION:
            start += 1
        while end > start and word[end - 1] in PUNCTUATION:
            end -= 1
        tokens.extend(word[:start])
        if start < end:
            tokens.append(word[start:end])
        tokens.extend(word[end:])
    return tokens


def filter_long(records: Sequence[R], max_tokens: int = 50, key=None) -> tuple[list[R], int]:
    """Drop records whose sentence has more than ``max_tokens`` tokens.

    ``key`` extracts the sentence; by default ``record.sentence`` (or the
    record itself when it is a string). Returns (kept, dropped_count).
    """
    if key is None:
        def key(r):
            return r if isinstance(r, str) else r.sentence
    kept = [r for r in records if len(tokenize_german(key(r))) <= max_tokens]
    return kept, len(records) - len(kept)
