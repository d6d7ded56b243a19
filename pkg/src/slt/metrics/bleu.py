"""Corpus BLEU-4 with 13a tokenization and exponential smoothing."""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence

from ..errors import ContractError

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]

MAX_ORDER = 4


def tokenize_13a(text: str) -> list[str]:
    """mteval-v13a tokenization (the default of common BLEU scorers)."""
    line = text.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = line.replace("&quot;", '"').replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">")
    line = f" {line} "
    for pattern, repl in _13A_RULES:
        line = pattern.sub(repl, line)
    return line.split()


def ngrams(tokens: Sequence[str], max_order: int) -> Counter:
    out: Counter = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            out[tuple(tokens[i:i + n])] += 1
    return out


def check_parallel(hypotheses: Sequence[str], references: Sequence[str]) -> None:
    if len(hypotheses) != len(references):
        raise ContractError(f"{len(hypotheses)} hypotheses but {len(references)} references")


def sentence_stats(hyp: str, ref: str) -> list[int]:
    """[hyp_len, ref_len, match_1..4, total_1..4] for one pair."""
    h, r = tokenize_13a(hyp), tokenize_13a(ref)
    hc, rc = ngrams(h, MAX_ORDER), ngrams(r, MAX_ORDER)
    matches = [0] * MAX_ORDER
    totals = [max(0, len(h) - n) for n in range(MAX_ORDER)]
    for gram, count in hc.items():
        if gram in rc:
            matches[len(gram) - 1] += min(count, rc[gram])
    return [len(h), len(r)] + matches + totals


def bleu_from_stats(stats: Sequence[int]) -> float:
    hyp_len, ref_len = stats[0], stats[1]
    matches, totals = stats[2:2 + MAX_ORDER], stats[2 + MAX_ORDER:]
    if hyp_len == 0 or sum(matches) == 0:
        return 0.0
    smooth = 1.0
    log_sum = 0.0
    for m, t in zip(matches, totals):
        if t == 0:
            # hypothesis shorter than n: the precision collapses to zero
            return 0.0
        if m == 0:
            smooth *= 2
            p = 1.0 / (smooth * t)
        else:
            p = m / t
        log_sum += math.log(p)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1 - ref_len / hyp_len)
    return bp * math.exp(log_sum / MAX_ORDER) * 100


def corpus_bleu_stats(hypotheses: Sequence[str], references: Sequence[str]) -> list[list[int]]:
    check_parallel(hypotheses, references)
    return [sentence_stats(h, r) for h, r in zip(hypotheses, references)]


def bleu_score(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    stats = corpus_bleu_stats(hypotheses, references)
    return bleu_from_stats([sum(col) for col in zip(*stats)] if stats else [0] * 10)
