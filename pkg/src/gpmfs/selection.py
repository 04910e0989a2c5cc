"""Global and per-label personalized feature sets from a learned weight matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InvariantError

__all__ = [
    "FeatureSelection",
    "global_size",
    "rank_global",
    "personalized_features",
    "complete_sets",
    "select_features",
]


@dataclass(frozen=True, eq=False)
class FeatureSelection:
    global_: tuple
    personalized: tuple
    complete: tuple
    q_used: float
    global_fraction_used: float
    row_norms: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.row_norms)

    def mean_personalized(self) -> float:
        return float(np.mean([len(pf) for pf in self.personalized]))

    def personalized_proportion(self) -> float:
        """Average personalized-set size over labels, as a fraction of all features."""
        return self.mean_personalized() / self.n_features

    def same_sets(self, other: "FeatureSelection") -> bool:
        return (self.global_ == other.global_ and self.personalized == other.personalized
                and self.complete == other.complete)


def global_size(n_features: int, fraction: float) -> int:
    # half-up rounding with a floor of one feature
    return max(1, min(n_features, int(math.floor(fraction * n_features + 0.5))))


def rank_global(W, global_fraction: float) -> list[int]:
    """Top ``global_fraction`` of rows by l2 norm, descending; ties go to the lower index."""
    W = np.asarray(W, dtype=float)
    norms = np.linalg.norm(W, axis=1)
    order = np.lexsort((np.arange(len(norms)), -norms))
    return order[:global_size(len(norms), global_fraction)].tolist()


def personalized_features(W, global_set, q: float) -> list[list[int]]:
    """Per-label features outside the global set that beat enough global features.

    Feature j joins label i's set when ``|W[j, i]|`` strictly exceeds the
    normalized norm ``||w_g|| / sqrt(L)`` of more than ``q * |GF|`` global features g.
    """
    W = np.asarray(W, dtype=float)
    gf = list(global_set)
    if not gf:
        raise ArgumentError("the global feature set is empty")
    F, L = W.shape
    thresholds = np.linalg.norm(W[gf], axis=1) / math.sqrt(L)
    in_gf = np.zeros(F, dtype=bool)
    in_gf[gf] = True
    candidates = np.flatnonzero(~in_gf)
    A = np.abs(W[candidates])  # (candidates, L)
    counts = (A[:, :, None] > thresholds[None, None, :]).sum(axis=2)
    chosen = counts > q * len(gf)
    return [candidates[chosen[:, i]].tolist() for i in range(L)]


def complete_sets(global_set, personalized) -> list[list[int]]:
    """Global features in rank order followed by each label's personalized features ascending."""
    g = list(global_set)
    gs = set(g)
    out = []
    for i, pf in enumerate(personalized):
        overlap = gs.intersection(pf)
        if overlap:
            raise InvariantError(f"label {i}: personalized features {sorted(overlap)} are also global")
        out.append(g + sorted(pf))
    return out


def select_features(W, global_fraction: float, q: float) -> FeatureSelection:
    W = np.asarray(W, dtype=float)
    gf = rank_global(W, global_fraction)
    pf = personalized_features(W, gf, q)
    cf = complete_sets(gf, pf)
    return FeatureSelection(
        global_=tuple(gf),
        personalized=tuple(tuple(p) for p in pf),
        complete=tuple(tuple(c) for c in cf),
        q_used=float(q),
        global_fraction_used=float(global_fraction),
        row_norms=np.linalg.norm(W, axis=1),
    )
