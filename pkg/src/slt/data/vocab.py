"""Token <-> id mapping with fixed special ids."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
SPECIALS = (PAD, BOS, EOS, UNK)
SPECIAL_IDS = frozenset((PAD_ID, BOS_ID, EOS_ID, UNK_ID))


class Vocabulary:
    def __init__(self, tokens: Sequence[str] = (), counts: dict[str, int] | None = None):
        self.itos: list[str] = list(SPECIALS)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(SPECIALS)}
        for tok in tokens:
            if tok in self.stoi:
                raise ValueError(f"duplicate token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)
        self.counts = dict(counts or {})

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.itos[int(idx)]

    def encode(self, tokens: Iterable[str], add_eos: bool = True) -> list[int]:
        ids = [self.id(t) for t in tokens]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.itos[int(i)] for i in ids]

    def frequencies(self) -> dict[str, int]:
        """Training unigram counts of the regular (non-special) tokens."""
        return {t: self.counts.get(t, 0) for t in self.itos[len(SPECIALS):]}

    def to_json(self) -> dict:
        return {"tokens": self.itos[len(SPECIALS):], "counts": self.counts}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(obj["tokens"], obj.get("counts"))


def build_vocab(tokenized: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Ids from 4 upward, ordered by frequency (desc) then token (asc)."""
    counts: Counter[str] = Counter()
    for sent in tokenized:
        counts.update(sent)
    for special in SPECIALS:
        counts.pop(special, None)
    kept = [t for t, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept, {t: counts[t] for t in kept})
