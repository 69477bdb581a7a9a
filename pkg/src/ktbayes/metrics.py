"""Prediction metrics: rank-based AUC and RMSE."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ScoredPrediction:
    score: float
    label: int
    student: str = ""
    seq_index: int = 0


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values assigned their group midrank."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts + 1
    return (starts + (counts - 1) / 2.0)[inverse]


def auc_scores(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties 1/2.

    Computed from midranks (the Mann-Whitney statistic), which matches
    pairwise comparison exactly while staying O(n log n).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined without both a positive and a negative")
    ranks = _midranks(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def rmse_scores(scores, labels) -> float:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.size == 0:
        raise ValueError("RMSE is undefined on empty input")
    return float(math.sqrt(np.mean((scores - labels) ** 2)))


def auc(preds: Sequence[ScoredPrediction]) -> float:
    return auc_scores([p.score for p in preds], [p.label for p in preds])


def rmse(preds: Sequence[ScoredPrediction]) -> float:
    return rmse_scores([p.score for p in preds], [p.label for p in preds])
