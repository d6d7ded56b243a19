"""chrF2++: character 1-6 grams plus word 1-2 grams, beta = 2."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

from .bleu import check_parallel

CHAR_ORDER = 6
WORD_ORDER = 2
BETA = 2.0
PUNCTUATION = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


def split_punctuation(sentence: str) -> list[str]:
    """Whitespace tokens with one leading or trailing punctuation mark split off."""
    out = []
    for w in sentence.split():
        if len(w) == 1:
            out.append(w)
        elif w[-1] in PUNCTUATION:
            out += [w[:-1], w[-1]]
        elif w[0] in PUNCTUATION:
            out += [w[0], w[1:]]
        else:
            out.append(w)
    return out


def _grams(seq, n: int) -> Counter:
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


def sentence_stats(hyp: str, ref: str) -> list[int]:
    """Per order (char 1-6, then word 1-2): hyp count, ref count, matches."""
    out = []
    hc, rc = "".join(hyp.split()), "".join(ref.split())
    hw, rw = split_punctuation(hyp), split_punctuation(ref)
    for seq_h, seq_r, order in ((hc, rc, CHAR_ORDER), (hw, rw, WORD_ORDER)):
        for n in range(1, order + 1):
            gh, gr = _grams(seq_h, n), _grams(seq_r, n)
            match = sum(min(c, gr[g]) for g, c in gh.items() if g in gr)
            out += [sum(gh.values()), sum(gr.values()), match]
    return out


def chrf_from_stats(stats: Sequence[int]) -> float:
    precs, recs = [], []
    for i in range(0, len(stats), 3):
        n_hyp, n_ref, match = stats[i:i + 3]
        if n_hyp > 0 and n_ref > 0:
            precs.append(match / n_hyp)
            recs.append(match / n_ref)
    if not precs:
        return 0.0
    p, r = sum(precs) / len(precs), sum(recs) / len(recs)
    if p + r == 0:
        return 0.0
    b2 = BETA**2
    return (1 + b2) * p * r / (b2 * p + r) * 100


def corpus_chrf_stats(hypotheses: Sequence[str], references: Sequence[str]) -> list[list[int]]:
    check_parallel(hypotheses, references)
    return [sentence_stats(h, r) for h, r in zip(hypotheses, references)]


def chrf_score(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    stats = corpus_chrf_stats(hypotheses, references)
    n = 3 * (CHAR_ORDER + WORD_ORDER)
    return chrf_from_stats([sum(col) for col in zip(*stats)] if stats else [0] * n)
