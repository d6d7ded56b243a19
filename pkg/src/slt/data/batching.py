"""Clip/target datasets and shuffled, padded micro-batches."""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from ..rng import SplitMix64
from .clipfile import load_clip
from .manifest import ClipManifestRecord
from .text import tokenize_german
from .vocab import PAD_ID, Vocabulary


@dataclass
class Batch:
    clips: np.ndarray        # (N, 3, D, H, W) float32
    target_ids: np.ndarray   # (N, T) int64, EOS-terminated, PAD-filled
    target_mask: np.ndarray  # (N, T) bool, True on non-PAD positions
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def n_tokens(self) -> int:
        return int(self.target_mask.sum())


class ClipDataset:
    """Pairs of (clip, EOS-terminated target ids).

    Clips come either from ClipFiles named in manifest records (loaded
    lazily, optionally cached) or from in-memory arrays.
    """

    def __init__(self, sentences: Sequence[str], vocab: Vocabulary, clip_dims: tuple[int, int, int],
                 clip_paths: Sequence[str] | None = None, clips: Sequence[np.ndarray] | None = None,
                 cache: bool = True):
        if (clip_paths is None) == (clips is None):
            raise ValueError("give exactly one of clip_paths or clips")
        self.sentences = list(sentences)
        self.vocab = vocab
        self.clip_dims = tuple(clip_dims)
        self.clip_paths = list(clip_paths) if clip_paths is not None else None
        self._clips: dict[int, np.ndarray] = {}
        if clips is not None:
            self._clips = {i: np.asarray(c, dtype=np.float32) for i, c in enumerate(clips)}
        self.cache = cache
        self.targets = [vocab.encode(tokenize_german(s)) for s in self.sentences]
        n_clips = len(self.clip_paths) if self.clip_paths is not None else len(self._clips)
        if n_clips != len(self.sentences):
            raise ValueError("clip and sentence counts differ")

    @classmethod
    def from_records(cls, records: Sequence[ClipManifestRecord], vocab: Vocabulary,
                     clip_dims: tuple[int, int, int], cache: bool = True) -> "ClipDataset":
        return cls([r.sentence for r in records], vocab, clip_dims,
                   clip_paths=[r.clip_path for r in records], cache=cache)

    def __len__(self) -> int:
        return len(self.sentences)

    def clip(self, i: int) -> np.ndarray:
        i = int(i)
        if i in self._clips:
            return self._clips[i]
        clip = load_clip(self.clip_paths[i], self.clip_dims)
        if self.cache:
            self._clips[i] = clip
        return clip

    def token_count(self, indices) -> int:
        return sum(len(self.targets[int(i)]) for i in indices)


def pad_targets(targets: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    t = max(len(x) for x in targets)
    ids = np.full((len(targets), t), PAD_ID, dtype=np.int64)
    for row, seq in enumerate(targets):
        ids[row, :len(seq)] = seq
    return ids, ids != PAD_ID


def epoch_plan(n: int, batch_size: int, rng: SplitMix64 | None, shuffle: bool = True) -> list[np.ndarray]:
    """Index groups for one epoch; the final short batch is kept."""
    if n < 1:
        raise ValueError("cannot batch an empty dataset")
    order = rng.permutation(n) if shuffle and rng is not None else np.arange(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def collate(dataset: ClipDataset, indices: np.ndarray, load: Callable[[int], np.ndarray] | None = None) -> Batch:
    load = load or dataset.clip
    clips = np.stack([load(i) for i in indices])
    ids, mask = pad_targets([dataset.targets[int(i)] for i in indices])
    return Batch(clips, ids, mask, np.asarray(indices))


def batch_iter(dataset: ClipDataset, batch_size: int = 10, rng: SplitMix64 | None = None,
               shuffle: bool = True, num_workers: int = 0,
               plan: list[np.ndarray] | None = None) -> Iterator[Batch]:
    """Yield padded batches in plan order.

    With ``num_workers > 0`` clips are loaded by a thread pool; batches
    still arrive in order.
    """
    if plan is None:
        plan = epoch_plan(len(dataset), batch_size, rng, shuffle)
    if num_workers <= 0:
        for idx in plan:
            yield collate(dataset, idx)
        return
    # bounded prefetch so at most 2 * num_workers batches sit in memory
    with ThreadPoolExecutor(max_workers=num_workers) as pool:
        pending: deque = deque()
        for idx in plan:
            pending.append(pool.submit(collate, dataset, idx))
            if len(pending) >= 2 * num_workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
