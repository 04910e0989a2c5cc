"""Independent definition transcriptions used as test oracles.

Everything here is written with plain loops over Python scalars and does not
import the package, so agreement with it is a genuine cross-check.
"""
import math


def hamming(truth, dec):
    n, L = len(truth), len(truth[0])
    return sum(int(truth[r][c]) != int(dec[r][c]) for r in range(n) for c in range(L)) / (n * L)


def micro_f1(truth, dec):
    tp = fp = fn = 0
    for tr, dr in zip(truth, dec):
        for t, d in zip(tr, dr):
            tp += t and d
            fp += (not t) and d
            fn += t and not d
    return 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)


def macro_f1(truth, dec):
    L = len(truth[0])
    total = 0.0
    for c in range(L):
        tp = sum(1 for r in range(len(truth)) if truth[r][c] and dec[r][c])
        fp = sum(1 for r in range(len(truth)) if not truth[r][c] and dec[r][c])
        fn = sum(1 for r in range(len(truth)) if truth[r][c] and not dec[r][c])
        total += 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
    return total / L


def _rank(scores_row, c):
    """1 + number of labels strictly ahead of c (higher score, or equal score and lower index)."""
    s = scores_row[c]
    return 1 + sum(1 for j, v in enumerate(scores_row) if v > s or (v == s and j < c))


def one_error(truth, scores):
    rows = [r for r in range(len(truth)) if any(truth[r])]
    if not rows:
        return 0.0
    wrong = 0
    for r in rows:
        top = [c for c in range(len(scores[r])) if _rank(scores[r], c) == 1][0]
        wrong += not truth[r][top]
    return wrong / len(rows)


def average_precision(truth, scores):
    rows = [r for r in range(len(truth)) if any(truth[r])]
    if not rows:
        return 0.0
    total = 0.0
    for r in rows:
        rel = [c for c in range(len(truth[r])) if truth[r][c]]
        acc = 0.0
        for c in rel:
            rc = _rank(scores[r], c)
            acc += sum(1 for j in rel if _rank(scores[r], j) <= rc) / rc
        total += acc / len(rel)
    return total / len(rows)


def friedman(ranks):
    """Friedman chi-square and Iman-Davenport F from a k x c rank table."""
    k, c = len(ranks), len(ranks[0])
    R = [sum(ranks[i][j] for i in range(k)) / k for j in range(c)]
    chi2 = 12 * k / (c * (c + 1)) * (sum(r * r for r in R) - c * (c + 1) ** 2 / 4)
    chi2 = max(chi2, 0.0)
    den = k * (c - 1) - chi2
    return chi2, (math.inf if den <= 0 else (k - 1) * chi2 / den)


def tie_averaged_ranks(row, higher_is_better=True):
    out = []
    for v in row:
        better = sum(1 for w in row if (w > v if higher_is_better else w < v))
        equal = sum(1 for w in row if w == v)
        out.append(better + (equal + 1) / 2)
    return out


def personalized(W, gf, q):
    """Per-label personalized sets by direct counting."""
    F, L = len(W), len(W[0])
    thr = [math.sqrt(sum(x * x for x in W[g])) / math.sqrt(L) for g in gf]
    out = []
    for i in range(L):
        pf = []
        for j in range(F):
            if j in gf:
                continue
            count = sum(1 for t in thr if abs(W[j][i]) > t)
            if count > q * len(gf):
                pf.append(j)
        out.append(pf)
    return out


def sq_dist(a, b, cols):
    return sum((a[f] - b[f]) ** 2 for f in cols)


def per_label_knn(train_X, train_Y, test_X, complete, k):
    """Per-label KNN over each label's feature subset, ties to the lower training index."""
    scores = []
    for x in test_X:
        row = []
        for i, cf in enumerate(complete):
            order = sorted(range(len(train_X)), key=lambda t: (sq_dist(train_X[t], x, cf), t))
            row.append(sum(train_Y[t][i] for t in order[:k]) / k)
        scores.append(row)
    return scores


def mlknn(train_X, train_Y, test_X, k, s=1.0):
    """ML-KNN posteriors by direct counting."""
    n, L = len(train_X), len(train_Y[0])
    cols = range(len(train_X[0]))

    def nbrs(x, exclude=None):
        cand = [t for t in range(n) if t != exclude]
        return sorted(cand, key=lambda t: (sq_dist(train_X[t], x, cols), t))[:k]

    out = []
    deltas = [[sum(train_Y[t][j] for t in nbrs(train_X[r], r)) for j in range(L)] for r in range(n)]
    for x in test_X:
        nb = nbrs(x)
        row = []
        for j in range(L):
            pos = sum(train_Y[r][j] for r in range(n))
            h1 = (s + pos) / (2 * s + n)
            h0 = 1 - h1
            d = sum(train_Y[t][j] for t in nb)
            c1 = sum(1 for r in range(n) if train_Y[r][j] == 1 and deltas[r][j] == d)
            c0 = sum(1 for r in range(n) if train_Y[r][j] == 0 and deltas[r][j] == d)
            n1 = sum(1 for r in range(n) if train_Y[r][j] == 1)
            n0 = n - n1
            e1 = (s + c1) / (s * (k + 1) + n1)
            e0 = (s + c0) / (s * (k + 1) + n0)
            row.append(h1 * e1 / (h1 * e1 + h0 * e0))
        out.append(row)
    return out
