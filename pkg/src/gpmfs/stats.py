"""Rank-based comparison of several methods over several datasets.

Critical values (the F-distribution cut-off and the Bonferroni-Dunn ``q_alpha``)
are inputs; they are not computed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ArgumentError

__all__ = [
    "RankTable",
    "average_ranks",
    "friedman_statistic",
    "bonferroni_dunn_cd",
    "compare_to_control",
    "DEFAULT_Q_ALPHA",
    "DEFAULT_CRITICAL_VALUE",
]

# Bonferroni-Dunn q at alpha = 0.1 for seven methods, and F(6, 54) at alpha = 0.05
DEFAULT_Q_ALPHA = 2.394
DEFAULT_CRITICAL_VALUE = 2.2720


@dataclass(frozen=True, eq=False)
class RankTable:
    """Scores of ``c`` methods (columns) on ``k`` datasets (rows).

    ``ranks`` gives the best method of each row rank 1; tied methods share the
    average of the ranks they span.
    """

    scores: np.ndarray
    higher_is_better: bool = True
    methods: tuple = ()
    datasets: tuple = ()

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        if s.ndim != 2:
            raise ArgumentError("score table must be a 2-D matrix")
        if s.shape[0] < 2 or s.shape[1] < 2:
            raise ArgumentError(f"need at least 2 datasets and 2 methods, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ArgumentError("score table contains non-finite values")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)
        if not self.methods:
            object.__setattr__(self, "methods", tuple(f"method_{j}" for j in range(s.shape[1])))
        if not self.datasets:
            object.__setattr__(self, "datasets", tuple(f"dataset_{i}" for i in range(s.shape[0])))

    @classmethod
    def from_ranks(cls, ranks, **kw) -> "RankTable":
        """Table whose scores are ranks themselves (lower is better)."""
        return cls(np.asarray(ranks, dtype=float), higher_is_better=False, **kw)

    @property
    def ranks(self) -> np.ndarray:
        keyed = -self.scores if self.higher_is_better else self.scores
        return rankdata(keyed, method="average", axis=1)

    @property
    def n_datasets(self) -> int:
        return self.scores.shape[0]

    @property
    def n_methods(self) -> int:
        return self.scores.shape[1]


def average_ranks(table: RankTable) -> np.ndarray:
    return table.ranks.mean(axis=0)


def friedman_statistic(table: RankTable) -> tuple[float, float]:
    """Friedman chi-square and its Iman-Davenport F correction.

    ``F_F`` is ``inf`` when the ranks are perfectly consistent across datasets
    (the correction's denominator vanishes).
    """
    k, c = table.n_datasets, table.n_methods
    R = average_ranks(table)
    chi2 = 12.0 * k / (c * (c + 1)) * (np.sum(R ** 2) - c * (c + 1) ** 2 / 4.0)
    chi2 = max(float(chi2), 0.0)
    denom = k * (c - 1) - chi2
    if denom <= 0:
        return chi2, math.inf
    return chi2, float((k - 1) * chi2 / denom)


def bonferroni_dunn_cd(q_alpha: float, c: int, k: int) -> float:
    """Critical difference ``q_alpha * sqrt(c (c + 1) / (6 k))``."""
    if c < 2 or k < 1:
        raise ArgumentError(f"need c >= 2 methods and k >= 1 datasets, got c={c}, k={k}")
    if q_alpha < 0:
        raise ArgumentError("q_alpha must be nonnegative")
    return q_alpha * math.sqrt(c * (c + 1) / (6.0 * k))


def compare_to_control(table: RankTable, control: int, q_alpha: float = DEFAULT_Q_ALPHA) -> list[bool]:
    """For each method, whether its average rank differs from the control's by more than CD.

    The control itself is reported as ``False``.
    """
    R = average_ranks(table)
    cd = bonferroni_dunn_cd(q_alpha, table.n_methods, table.n_datasets)
    return [bool(j != control and abs(R[j] - R[control]) > cd) for j in range(len(R))]
