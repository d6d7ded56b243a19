"""Corpus (tokens per sentence) and video (seconds) statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .text import tokenize_german


@dataclass
class CorpusStats:
    sentence_count: int
    vocab_size: int
    min: float
    mean: float
    max: float
    std: float

    def row(self, name: str) -> str:
        return (f"{name}\t{self.sentence_count}\t{self.vocab_size}\t"
                f"{self.min:g}/{self.mean:.2f}/{self.max:g}/{self.std:.2f}")


def _summary(values: Sequence[float]) -> tuple[float, float, float, float]:
    if not values:
        return 0.0, 0.0, 0.0, 0.0
    n = len(values)
    mu = math.fsum(values) / n
    var = math.fsum((v - mu) ** 2 for v in values) / n  # population
    return float(min(values)), mu, float(max(values)), math.sqrt(var)


def corpus_stats(sentences: Sequence[str]) -> CorpusStats:
    tokenized = [tokenize_german(s) for s in sentences]
    lo, mu, hi, sd = _summary([len(t) for t in tokenized])
    types = {tok for sent in tokenized for tok in sent}
    return CorpusStats(len(sentences), len(types), lo, mu, hi, sd)


def video_stats(durations_s: Sequence[float]) -> dict:
    lo, mu, hi, sd = _summary([float(d) for d in durations_s])
    return {"count": len(durations_s), "min": lo, "mean": mu, "max": hi, "std": sd}


def format_video_row(name: str, stats: dict) -> str:
    return (f"{name}\t{stats['count']}\t{stats['min']:.1f}\t{stats['mean']:.1f}\t"
            f"{stats['max']:.1f}\t{stats['std']:.1f}")


CORPUS_HEADER = "Corpus\tSentences\tVocab\tMin/Mean/Max/Std"
VIDEO_HEADER = "Corpus\tVideos\tMin\tMean\tMax\tStd"
