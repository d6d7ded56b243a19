from .baseline import random_walk_baseline
from .bleu import bleu_score, tokenize_13a
from .chrf import chrf_score
from .scoring import (
    METRICS,
    MetricScore,
    bleu,
    bootstrap_ci,
    chrf2pp,
    corpus_score,
    resample_indices,
    score_with_ci,
)

__all__ = [
    "METRICS", "MetricScore", "bleu", "bleu_score", "bootstrap_ci", "chrf2pp", "chrf_score",
    "corpus_score", "random_walk_baseline", "resample_indices", "score_with_ci", "tokenize_13a",
]
