"""Seeded synthetic (clip, sentence) corpus for desk-scale experiments.

Each sentence is drawn from a small German word list. Its clip splits the
frames into one segment per token; during a token's segment a coloured
block moves across the frame, with colour, start point and velocity fixed
by the token id. A model that reads the clip can therefore recover the
sentence, so a correct end-to-end system is able to overfit it.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..rng import SplitMix64
from .clipfile import write_clip
from .manifest import ClipManifestRecord, write_manifest

WORDS = (
    "die", "der", "und", "in", "zu", "den", "das", "nicht", "von", "sie",
    "ist", "des", "sich", "mit", "dem", "dass", "er", "es", "ein", "ich",
    "auf", "so", "eine", "auch", "als", "an", "nach", "wie", "im", "für",
)


def word_list(vocab_size: int) -> list[str]:
    words = list(WORDS[:vocab_size])
    words += [f"wort{k}" for k in range(len(words), vocab_size)]
    return words


def render_clip(token_ids: list[int], clip_dims: tuple[int, int, int], rng: SplitMix64,
                noise: float = 0.02) -> np.ndarray:
    depth, height, width = clip_dims
    clip = (noise * rng.random((3, depth, height, width))).astype(np.float32)
    bh, bw = max(2, height // 4), max(2, width // 4)
    n = len(token_ids)
    bounds = np.linspace(0, depth, n + 1)
    for j, tok in enumerate(token_ids):
        look = SplitMix64(0x5EED + tok).random(5)
        color = 0.35 + 0.65 * look[:3]
        y0, x0 = look[3] * (height - bh), look[4] * (width - bw)
        vy, vx = (tok % 3) - 1, ((tok // 3) % 3) - 1
        f0, f1 = int(round(bounds[j])), max(int(round(bounds[j + 1])), int(round(bounds[j])) + 1)
        for step, f in enumerate(range(f0, min(f1, depth))):
            y = int(y0 + vy * step * max(1, bh // 2)) % (height - bh + 1)
            x = int(x0 + vx * step * max(1, bw // 2)) % (width - bw + 1)
            clip[:, f, y:y + bh, x:x + bw] = color[:, None, None]
    return clip


def synth_pairs(n: int, vocab_size: int, clip_dims: tuple[int, int, int], rng: SplitMix64,
                min_len: int = 3, max_len: int = 6) -> tuple[list[str], list[np.ndarray]]:
    """In-memory (sentences, clips); sentences are distinct when the space allows."""
    if n < 1:
        raise ValueError("n must be >= 1")
    words = word_list(vocab_size)
    seen: set[tuple[int, ...]] = set()
    sentences, clips = [], []
    for _ in range(n):
        for _attempt in range(100):
            length = min_len + rng.randint(max_len - min_len + 1)
            ids = tuple(int(k) for k in rng.randint(vocab_size, length))
            if ids not in seen:
                break
        seen.add(ids)
        sentences.append(" ".join(words[k] for k in ids))
        clips.append(render_clip(list(ids), clip_dims, rng))
    return sentences, clips


def synth_corpus(n: int, vocab_size: int, clip_dims: tuple[int, int, int], rng: SplitMix64,
                 out_dir: str | os.PathLike, fps: int = 25, **kwargs) -> tuple[list[ClipManifestRecord], str]:
    """Write n ClipFiles plus ``manifest.tsv`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    sentences, clips = synth_pairs(n, vocab_size, clip_dims, rng, **kwargs)
    duration_ms = int(round(1000 * clip_dims[0] / fps))
    records = []
    for i, (sentence, clip) in enumerate(zip(sentences, clips)):
        path = out / "clips" / f"synth_{i:05d}.sltc"
        write_clip(path, clip)
        records.append(ClipManifestRecord(str(path), sentence, "synthetic", 0, duration_ms))
    manifest = out / "manifest.tsv"
    write_manifest(manifest, records)
    return records, str(manifest)
