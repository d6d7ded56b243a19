"""Random-walk hypotheses: tokens drawn i.i.d. with repetition."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..data.vocab import SPECIALS
from ..errors import ContractError
from ..rng import SplitMix64

MAX_LEN = 50


def random_walk_baseline(vocab_freqs: Mapping[str, int], n_sentences: int, length_dist: Sequence[int],
                         rng: SplitMix64, weighting: str = "frequency", max_len: int = MAX_LEN) -> list[str]:
    """Sentences whose lengths follow ``length_dist`` (an empirical sample)
    and whose tokens follow unigram frequency, or are uniform when
    ``weighting="uniform"``. Special tokens never appear.
    """
    items = [(t, c) for t, c in vocab_freqs.items() if t not in SPECIALS and c > 0]
    if not items:
        raise ContractError("frequency table has no usable tokens")
    if not length_dist:
        raise ContractError("length distribution is empty")
    tokens = [t for t, _ in items]
    if weighting == "frequency":
        p = np.array([c for _, c in items], dtype=np.float64)
        p /= p.sum()
    elif weighting == "uniform":
        p = None
    else:
        raise ContractError(f"unknown weighting {weighting!r}")
    lengths = np.minimum(np.asarray(length_dist, dtype=np.int64), max_len)
    out = []
    for _ in range(n_sentences):
        length = int(lengths[rng.randint(len(lengths))])
        ids = rng.choice(len(tokens), length, p=p) if length else []
        out.append(" ".join(tokens[i] for i in ids))
    return out
