"""Label prediction from selected features and the cross-validation harness.

The default predictor is a per-label KNN with a two-stage neighbour search:
candidates are gathered by distance over the global features, then re-ranked
for each label by distance over that label's complete feature set. An ML-KNN
predictor over a single feature subset is provided as the reference.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import apply_standardizer, fit_standardizer, kfold_split
from .errors import ArgumentError, GPMFSError
from .metrics import METRIC_NAMES, MetricsReport, evaluate
from .selection import FeatureSelection, select_features
from .solver import HyperParams, solve
from .structures import knn_affinity, knn_indices, laplacian, pearson_matrix

__all__ = [
    "PredictionResult",
    "CvReport",
    "two_stage_knn_predict",
    "mlknn_predict",
    "cross_validate",
    "cross_validate_grid",
]

log = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class PredictionResult:
    scores: np.ndarray
    decisions: np.ndarray


def _nearest(test_X, train_X, k):
    """Indices of the k nearest training rows per test row, ties to the lower index."""
    D = cdist(test_X, train_X, "sqeuclidean")
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def two_stage_knn_predict(train, test, selection: FeatureSelection,
                          candidate_k: int = 20, final_k: int = 10) -> PredictionResult:
    """Per-label KNN voting with global-feature candidates and per-label re-ranking.

    ``score[r, i]`` is the fraction of the ``final_k`` re-ranked neighbours that
    carry label i; a label is predicted when that fraction exceeds 0.5.
    """
    n_train = train.n_instances
    if not selection.global_:
        raise ArgumentError("the global feature set is empty")
    if candidate_k > n_train:
        raise ArgumentError(f"candidate_k {candidate_k} exceeds training size {n_train}")
    if not 1 <= final_k <= candidate_k:
        raise ArgumentError(f"final_k must satisfy 1 <= final_k <= candidate_k, got {final_k}")
    if len(selection.complete) != train.n_labels:
        raise ArgumentError("selection was built for a different label space")

    gf = list(selection.global_)
    cand = _nearest(test.features[:, gf], train.features[:, gf], candidate_k)
    # ascending index order first, so a stable sort on distance breaks ties by index
    cand = np.sort(cand, axis=1)
    cand_X = train.features[cand]  # (n_test, candidate_k, F)
    Ytr = train.labels.astype(float)
    n_test, L = test.n_instances, train.n_labels
    scores = np.empty((n_test, L))
    rows = np.arange(n_test)[:, None]
    for i, cf in enumerate(selection.complete):
        cf = list(cf)
        diff = cand_X[:, :, cf] - test.features[:, None, cf]
        d = np.einsum("rcf,rcf->rc", diff, diff)
        keep = cand[rows, np.argsort(d, axis=1, kind="stable")[:, :final_k]]
        scores[:, i] = Ytr[keep, i].mean(axis=1)
    return PredictionResult(scores, (scores > DECISION_THRESHOLD).astype(np.int8))


def mlknn_predict(train, test, feature_subset=None, k: int = 10,
                  smoothing: float = 1.0) -> PredictionResult:
    """ML-KNN posteriors from neighbour label counts with Laplace smoothing."""
    n = train.n_instances
    if not 1 <= k < n:
        raise ArgumentError(f"k must satisfy 1 <= k < n_train (k={k}, n_train={n})")
    if not smoothing > 0:
        raise ArgumentError("smoothing must be positive")
    cols = list(range(train.n_features)) if feature_subset is None else list(feature_subset)
    if not cols:
        raise ArgumentError("empty feature subset")
    Xtr = train.features[:, cols]
    Y = train.labels.astype(int)
    L = Y.shape[1]
    s = smoothing

    prior1 = (s + Y.sum(axis=0)) / (2 * s + n)
    prior0 = 1.0 - prior1

    train_nbrs = knn_indices(cdist(Xtr, Xtr, "sqeuclidean"), k)
    delta = Y[train_nbrs].sum(axis=1)  # (n, L) positive-neighbour counts
    c1 = np.zeros((L, k + 1))
    c0 = np.zeros((L, k + 1))
    for j in range(L):
        c1[j] = np.bincount(delta[Y[:, j] == 1, j], minlength=k + 1)
        c0[j] = np.bincount(delta[Y[:, j] == 0, j], minlength=k + 1)
    cond1 = (s + c1) / (s * (k + 1) + c1.sum(axis=1, keepdims=True))
    cond0 = (s + c0) / (s * (k + 1) + c0.sum(axis=1, keepdims=True))

    test_nbrs = _nearest(test.features[:, cols], Xtr, k)
    dt = Y[test_nbrs].sum(axis=1)
    lab = np.arange(L)
    p1 = prior1 * cond1[lab, dt]
    p0 = prior0 * cond0[lab, dt]
    scores = p1 / (p1 + p0)
    return PredictionResult(scores, (scores > DECISION_THRESHOLD).astype(np.int8))


@dataclass
class CvReport:
    per_fold: list
    mean: MetricsReport
    selection_stats: list
    params: HyperParams
    seed: int
    folds: int
    candidate_k: int = 20
    final_k: int = 10
    predictor: str = "two-stage"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "folds": self.folds,
            "seed": self.seed,
            "predictor": self.predictor,
            "candidate_k": self.candidate_k,
            "final_k": self.final_k,
            "params": self.params.to_dict(),
            "per_fold": [
                dict(r.to_dict(), fold=i, **self.selection_stats[i])
                for i, r in enumerate(self.per_fold)
            ],
            "mean": dict(self.mean.to_dict(), **self.mean_selection_stats()),
            **self.extra,
        }

    def mean_selection_stats(self) -> dict:
        keys = ("global_size", "mean_personalized", "personalized_proportion")
        return {k: float(np.mean([s[k] for s in self.selection_stats])) for k in keys}

    def csv_rows(self) -> list[list]:
        header = ["fold", *METRIC_NAMES, "skipped_instances",
                  "global_size", "mean_personalized", "personalized_proportion"]
        rows = [header]
        for i, (r, st) in enumerate(zip(self.per_fold, self.selection_stats)):
            rows.append([i, *(getattr(r, m) for m in METRIC_NAMES), r.skipped_instances,
                         st["global_size"], st["mean_personalized"], st["personalized_proportion"]])
        ms = self.mean_selection_stats()
        rows.append(["mean", *(getattr(self.mean, m) for m in METRIC_NAMES),
                     self.mean.skipped_instances, ms["global_size"], ms["mean_personalized"],
                     ms["personalized_proportion"]])
        return rows


def _selection_stats(sel: FeatureSelection) -> dict:
    return {
        "global_size": len(sel.global_),
        "mean_personalized": sel.mean_personalized(),
        "personalized_proportion": sel.personalized_proportion(),
    }


def _run_fold(args):
    dataset, train_idx, test_idx, params, settings, candidate_k, final_k, predictor, fold = args
    try:
        train = dataset.subset(train_idx)
        test = dataset.subset(test_idx)
        scaler = fit_standardizer(train)
        train = apply_standardizer(train, scaler)
        test = apply_standardizer(test, scaler)
        n_train = train.n_instances
        if n_train < 2:
            raise ArgumentError("a training fold needs at least two rows")
        P = pearson_matrix(train.features)
        graph = knn_affinity(train.features, min(params.graph_k, n_train - 1), params.sigma)
        state = solve(train, (P, laplacian(graph)), params)
        ck = min(candidate_k, n_train)
        fk = min(final_k, ck)
        out = []
        for q, frac in settings:
            sel = select_features(state.W, frac, q)
            if predictor == "mlknn":
                pred = mlknn_predict(train, test, sel.global_, min(final_k, n_train - 1))
            else:
                pred = two_stage_knn_predict(train, test, sel, ck, fk)
            out.append((evaluate(test.labels, pred.decisions, pred.scores), _selection_stats(sel)))
        log.info("fold %d: %d train / %d test rows, %d solver iterations",
                 fold, n_train, test.n_instances, state.n_iter)
        return out
    except GPMFSError as exc:
        exc.fold = fold
        exc.args = (f"fold {fold}: {exc}",)
        raise


def cross_validate_grid(dataset, params: HyperParams, folds: int = 5, seed: int = 0,
                        settings=None, candidate_k: int = 20, final_k: int = 10,
                        predictor: str = "two-stage", workers: int = 1) -> list[CvReport]:
    """Cross-validate several (q, global_fraction) settings on one set of fold solves.

    Neither setting enters the solver, so each fold is solved once and every
    setting is evaluated on the same weight matrix. Returns one report per setting.
    """
    if predictor not in ("two-stage", "mlknn"):
        raise ArgumentError(f"unknown predictor {predictor!r}")
    if settings is None:
        settings = [(params.q, params.global_fraction)]
    settings = [(float(q), float(f)) for q, f in settings]
    for q, f in settings:
        HyperParams(q=q, global_fraction=f)  # range validation
    assignment = kfold_split(dataset.n_instances, folds, seed)
    jobs = [(dataset, assignment.train_indices(k), assignment.test_indices(k), params,
             settings, candidate_k, final_k, predictor, k) for k in range(folds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_fold, jobs))
    else:
        results = [_run_fold(j) for j in jobs]
    reports = []
    for s, (q, f) in enumerate(settings):
        per_fold = [results[k][s][0] for k in range(folds)]
        stats = [results[k][s][1] for k in range(folds)]
        reports.append(CvReport(
            per_fold=per_fold,
            mean=MetricsReport.mean_of(per_fold),
            selection_stats=stats,
            params=params.with_(q=q, global_fraction=f),
            seed=int(seed),
            folds=folds,
            candidate_k=candidate_k,
            final_k=final_k,
            predictor=predictor,
        ))
    return reports


def cross_validate(dataset, params: HyperParams, folds: int = 5, seed: int = 0,
                   candidate_k: int = 20, final_k: int = 10, predictor: str = "two-stage",
                   workers: int = 1) -> CvReport:
    """Per fold: standardize on training rows, build P and the graph Laplacian,
    solve, select, predict the held-out rows and score them."""
    return cross_validate_grid(dataset, params, folds, seed, None, candidate_k, final_k,
                               predictor, workers)[0]
