"""Metric scores with seeded bootstrap confidence intervals and JSON reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import ContractError
from ..rng import SplitMix64
from .bleu import bleu_from_stats, corpus_bleu_stats
from .chrf import chrf_from_stats, corpus_chrf_stats

N_RESAMPLES = 1000
SEED = 12345

SIGNATURES = {
    "bleu": "BLEU|nrefs:1|bs:{n}|seed:{seed}|case:mixed|eff:no|tok:13a|smooth:exp",
    "chrf": "chrF2++|nrefs:1|bs:{n}|seed:{seed}|case:mixed|eff:yes|nc:6|nw:2|space:no",
}


@dataclass(frozen=True)
class Metric:
    name: str
    stats: Callable[[Sequence[str], Sequence[str]], list[list[int]]]
    score: Callable[[Sequence[int]], float]


METRICS = {
    "bleu": Metric("bleu", corpus_bleu_stats, bleu_from_stats),
    "chrf": Metric("chrf", corpus_chrf_stats, chrf_from_stats),
}


@dataclass
class MetricScore:
    metric: str
    value: float
    ci_low: float
    ci_high: float
    n_resamples: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 100.0:
            raise ContractError(f"score {self.value} outside [0, 100]")

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def __str__(self) -> str:
        return f"{self.value:.2f}±{self.half_width:.2f} [{self.ci_low:.2f}, {self.ci_high:.2f}]"

    @property
    def signature(self) -> str:
        return SIGNATURES[self.metric].format(n=self.n_resamples, seed=self.seed)

    def report(self) -> dict:
        out = asdict(self)
        out["n"] = out.pop("n_resamples")
        out["signature"] = self.signature
        return out

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2)


def _get(metric: str | Metric) -> Metric:
    if isinstance(metric, Metric):
        return metric
    try:
        return METRICS[metric]
    except KeyError:
        raise ContractError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}") from None


def corpus_score(hypotheses: Sequence[str], references: Sequence[str], metric: str | Metric) -> float:
    m = _get(metric)
    stats = np.asarray(m.stats(hypotheses, references), dtype=np.int64)
    return m.score(stats.sum(axis=0).tolist()) if len(stats) else 0.0


def resample_indices(n_items: int, n: int = N_RESAMPLES, seed: int = SEED) -> np.ndarray:
    """(n, n_items) indices; row i comes from substream i of SplitMix64(seed)."""
    streams = SplitMix64(seed).spawn(n)
    return np.stack([s.randint(n_items, n_items) for s in streams])


def bootstrap_ci(hypotheses: Sequence[str], references: Sequence[str], metric: str | Metric = "bleu",
                 n: int = N_RESAMPLES, seed: int = SEED, level: float = 0.95) -> MetricScore:
    """Point score plus percentile interval over sentence-level resamples."""
    m = _get(metric)
    if len(hypotheses) != len(references):
        raise ContractError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if len(hypotheses) < 2:
        raise ContractError("bootstrap needs at least 2 sentences")
    stats = np.asarray(m.stats(hypotheses, references), dtype=np.int64)
    value = m.score(stats.sum(axis=0).tolist())
    idx = resample_indices(len(stats), n, seed)
    samples = np.array([m.score(stats[row].sum(axis=0).tolist()) for row in idx])
    tail = (1 - level) / 2 * 100
    lo, hi = np.percentile(samples, [tail, 100 - tail])
    return MetricScore(m.name, value, float(lo), float(hi), n, seed)


def score_with_ci(hypotheses: Sequence[str], references: Sequence[str], metric: str | Metric,
                  n: int = N_RESAMPLES, seed: int = SEED) -> MetricScore:
    """bootstrap_ci, or a zero-width interval for corpora of fewer than 2 sentences."""
    m = _get(metric)
    if len(hypotheses) >= 2 and n > 0:
        return bootstrap_ci(hypotheses, references, m, n, seed)
    value = corpus_score(hypotheses, references, m)
    return MetricScore(m.name, value, value, value, 0, seed)


def bleu(hypotheses: Sequence[str], references: Sequence[str], n: int = N_RESAMPLES,
         seed: int = SEED) -> MetricScore:
    return score_with_ci(hypotheses, references, "bleu", n, seed)


def chrf2pp(hypotheses: Sequence[str], references: Sequence[str], n: int = N_RESAMPLES,
            seed: int = SEED) -> MetricScore:
    return score_with_ci(hypotheses, references, "chrf", n, seed)
