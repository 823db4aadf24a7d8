"""Independent brute-force evaluators used to verify the engine.

Everything here is written with explicit Python loops over pairs, ranks, and
triplets, deliberately avoiding the vectorized code paths in the package.
These stay independent of the implementation they check.
"""

from __future__ import annotations

import math


def brute_rescale(values):
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def brute_rescale_matrix(matrix):
    """Min-max rescale the defined (non-None) upper triangle; mirror back."""
    n = len(matrix)
    defined = [(i, j) for i in range(n) for j in range(i + 1, n)
               if matrix[i][j] is not None]
    values = brute_rescale([matrix[i][j] for i, j in defined])
    out = [[None] * n for _ in range(n)]
    for (i, j), v in zip(defined, values):
        out[i][j] = v
        out[j][i] = v
    return out


def brute_mae(pred, gt):
    """Mean absolute error over unique pairs defined in both matrices."""
    n = len(gt)
    total = 0.0
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if pred[i][j] is None or gt[i][j] is None:
                continue
            total += abs(pred[i][j] - gt[i][j])
            count += 1
    if count == 0:
        return None
    return total / count


def brute_kendall(x, y):
    """Tau-b by explicit pair counting; None when a side is constant."""
    n = len(x)
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            if dx * dy > 0:
                concordant += 1
            elif dx * dy < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    if ties_x == n0 or ties_y == n0:
        return None
    return (concordant - discordant) / math.sqrt((n0 - ties_x) * (n0 - ties_y))


def brute_ranks(values):
    """1-based average ranks with explicit counting."""
    ranks = []
    for v in values:
        less = sum(1 for other in values if other < v)
        equal = sum(1 for other in values if other == v)
        ranks.append(less + (equal + 1) / 2)
    return ranks


def brute_spearman(x, y):
    """Pearson correlation of average ranks; None when a side is constant."""
    if all(v == x[0] for v in x) or all(v == y[0] for v in y):
        return None
    rx = brute_ranks(x)
    ry = brute_ranks(y)
    n = len(x)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)


def brute_ndcg(pred_row, gt_row, gain="linear"):
    """NDCG with similarity (1 - dissimilarity) as relevance.

    Ranking is by predicted dissimilarity ascending with ties broken by
    ascending position; all-zero relevance scores 1 by definition.
    """
    n = len(gt_row)
    rel = [1.0 - g for g in gt_row]
    if gain == "exp":
        rel = [2.0 ** r - 1.0 for r in rel]
    order = sorted(range(n), key=lambda j: (pred_row[j], j))
    dcg = sum(rel[order[r]] / math.log2(r + 2) for r in range(n))
    ideal = sorted(rel, reverse=True)
    idcg = sum(ideal[r] / math.log2(r + 2) for r in range(n))
    if idcg == 0.0:
        return 1.0
    return dcg / idcg


def brute_triplets(gt_row, margin):
    """All (j, k), j < k, with |gt[j] - gt[k]| strictly above the margin."""
    triplets = []
    for j in range(len(gt_row)):
        for k in range(j + 1, len(gt_row)):
            if abs(gt_row[j] - gt_row[k]) > margin:
                triplets.append((j, k))
    return triplets


def brute_triplet_agreement(pred_row, gt_row, margin):
    """Agreement ratio over extracted triplets; predicted ties disagree."""
    triplets = brute_triplets(gt_row, margin)
    if not triplets:
        return None, 0
    agree = 0
    for j, k in triplets:
        gt_sign = (gt_row[j] > gt_row[k]) - (gt_row[j] < gt_row[k])
        pred_sign = (pred_row[j] > pred_row[k]) - (pred_row[j] < pred_row[k])
        if gt_sign == pred_sign:
            agree += 1
    return agree / len(triplets), len(triplets)


def brute_rows(pred, gt):
    """(reference index, pred row, gt row) over jointly defined entries."""
    n = len(gt)
    rows = []
    for i in range(n):
        pred_row = []
        gt_row = []
        for j in range(n):
            if j == i or pred[i][j] is None or gt[i][j] is None:
                continue
            pred_row.append(pred[i][j])
            gt_row.append(gt[i][j])
        if pred_row:
            rows.append((i, pred_row, gt_row))
    return rows


def brute_dataset_scores(pred, gt, margin=0.1, gain="linear"):
    """Every metric for one dataset from raw (unrescaled) matrices.

    Returns {metric: (score or None, rows_evaluated, rows_skipped)} where the
    MAE slot holds (score, pair count, 0).
    """
    pred = brute_rescale_matrix(pred)
    gt = brute_rescale_matrix(gt)
    rows = brute_rows(pred, gt)
    out = {}

    count = sum(1 for i in range(len(gt)) for j in range(i + 1, len(gt))
                if pred[i][j] is not None and gt[i][j] is not None)
    out["mae"] = (brute_mae(pred, gt), count, 0)

    for metric in ("kendall", "spearman", "ndcg", "triplet"):
        scores = []
        skipped = 0
        for _, pred_row, gt_row in rows:
            if metric == "kendall":
                value = brute_kendall(pred_row, gt_row)
            elif metric == "spearman":
                value = brute_spearman(pred_row, gt_row)
            elif metric == "ndcg":
                value = brute_ndcg(pred_row, gt_row, gain)
            else:
                value, _ = brute_triplet_agreement(pred_row, gt_row, margin)
            if value is None:
                skipped += 1
            else:
                scores.append(value)
        mean = sum(scores) / len(scores) if scores else None
        out[metric] = (mean, len(scores), skipped)
    return out
