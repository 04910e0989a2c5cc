"""The five multi-label metrics.

Hamming loss and the two F1 scores take binary decisions; one-error and
average precision take real-valued label scores. Ranking ties always go to the
lower label index.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArgumentError

__all__ = [
    "MetricsReport",
    "METRIC_NAMES",
    "hamming_loss",
    "micro_f1",
    "macro_f1",
    "one_error",
    "average_precision",
    "label_ranks",
    "evaluate",
]

METRIC_NAMES = ("hamming_loss", "micro_f1", "macro_f1", "one_error", "average_precision")


def _pair(truth, other):
    t = np.asarray(truth)
    o = np.asarray(other)
    if t.shape != o.shape or t.ndim != 2:
        raise ArgumentError(f"shape mismatch: truth {t.shape} vs {o.shape}")
    return t, o


def hamming_loss(truth, decisions) -> float:
    t, d = _pair(truth, decisions)
    return float(np.mean(t.astype(bool) != d.astype(bool)))


def _counts(t, d, axis=None):
    t = t.astype(bool)
    d = d.astype(bool)
    tp = np.sum(t & d, axis=axis)
    fp = np.sum(~t & d, axis=axis)
    fn = np.sum(t & ~d, axis=axis)
    return tp, fp, fn


def micro_f1(truth, decisions) -> float:
    t, d = _pair(truth, decisions)
    tp, fp, fn = _counts(t, d)
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else float(2 * tp / denom)


def macro_f1(truth, decisions) -> float:
    """Mean per-label F1; a label with a zero denominator scores 1."""
    t, d = _pair(truth, decisions)
    tp, fp, fn = _counts(t, d, axis=0)
    denom = 2 * tp + fp + fn
    f1 = np.where(denom == 0, 1.0, 2 * tp / np.maximum(denom, 1))
    return float(np.mean(f1))


def label_ranks(scores) -> np.ndarray:
    """1-based rank of each label per row, by descending score."""
    s = np.asarray(scores, dtype=float)
    n, L = s.shape
    ranks = np.empty((n, L), dtype=int)
    idx = np.arange(L)
    for r in range(n):
        order = np.lexsort((idx, -s[r]))
        ranks[r, order] = idx + 1
    return ranks


def one_error(truth, scores) -> tuple[float, int]:
    """Fraction of rows whose top-ranked label is absent, and the number of skipped rows.

    Rows without any true label are skipped; if every row is skipped the value is 0.
    """
    t, s = _pair(truth, scores)
    keep = t.any(axis=1)
    skipped = int(np.sum(~keep))
    if not keep.any():
        return 0.0, skipped
    top = np.argmax(s[keep], axis=1)  # argmax returns the first maximum
    wrong = t[keep][np.arange(top.size), top] == 0
    return float(np.mean(wrong)), skipped


def average_precision(truth, scores) -> tuple[float, int]:
    t, s = _pair(truth, scores)
    keep = t.any(axis=1)
    skipped = int(np.sum(~keep))
    if not keep.any():
        return 0.0, skipped
    t = t[keep].astype(bool)
    ranks = label_ranks(s[keep])
    vals = []
    for tr, rk in zip(t, ranks):
        rel = np.sort(rk[tr])
        # the k-th relevant label (in rank order) has exactly k relevant labels at or above it
        vals.append(np.mean(np.arange(1, rel.size + 1) / rel))
    return float(np.mean(vals)), skipped


@dataclass(frozen=True)
class MetricsReport:
    hamming_loss: float
    micro_f1: float
    macro_f1: float
    one_error: float
    average_precision: float
    skipped_instances: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def mean_of(cls, reports) -> "MetricsReport":
        reports = list(reports)
        vals = {m: float(np.mean([getattr(r, m) for r in reports])) for m in METRIC_NAMES}
        return cls(**vals, skipped_instances=int(sum(r.skipped_instances for r in reports)))


def evaluate(truth, decisions, scores) -> MetricsReport:
    oe, skipped = one_error(truth, scores)
    ap, _ = average_precision(truth, scores)
    return MetricsReport(
        hamming_loss=hamming_loss(truth, decisions),
        micro_f1=micro_f1(truth, decisions),
        macro_f1=macro_f1(truth, decisions),
        one_error=oe,
        average_precision=ap,
        skipped_instances=skipped,
    )
