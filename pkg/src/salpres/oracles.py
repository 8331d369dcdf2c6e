"""Slow reference implementations of the six metrics.

These are deliberately naive: plain Python loops over pixel lists,
written straight from each metric's definition, sharing no code with
metrics.py. The test suite runs both routes on random inputs and holds
them to 1e-6. Inputs are bare sequences so the reference route does not
depend on the package's data types.
"""

from __future__ import annotations

import math

import numpy as np

KL_EPS = 2.220446049250313e-16  # float64 machine epsilon, written out


def _flat(values):
    return [float(v) for row in values for v in row]


def nss_reference(values, fix_pixels):
    """Mean z-score at (col, row) fixation pixels; population std."""
    flat = _flat(values)
    n = len(flat)
    mean = sum(flat) / n
    var = sum((v - mean) ** 2 for v in flat) / n
    std = math.sqrt(var)
    scores = [(float(values[r][c]) - mean) / std for c, r in fix_pixels]
    return sum(scores) / len(scores)


def kl_reference(pred, gt):
    """sum over pixels of q * ln(eps + q / (p + eps)), q the ground truth."""
    total = 0.0
    for prow, qrow in zip(pred, gt):
        for p, q in zip(prow, qrow):
            total += float(q) * math.log(KL_EPS + float(q) / (float(p) + KL_EPS))
    return total


def _roc_area_reference(fix_vals, bg_vals):
    thresholds = sorted(set(fix_vals), reverse=True)
    points = [(0.0, 0.0)]
    for t in thresholds:
        tp = sum(1 for v in fix_vals if v >= t) / len(fix_vals)
        fp = sum(1 for v in bg_vals if v >= t) / len(bg_vals)
        points.append((fp, tp))
    points.append((1.0, 1.0))
    area = 0.0
    for (fp0, tp0), (fp1, tp1) in zip(points, points[1:]):
        area += (fp1 - fp0) * (tp0 + tp1) / 2.0
    return area


def auc_judd_reference(values, fix_pixels):
    """ROC area vs all non-fixated pixels, thresholds at fixation values."""
    fixed = set(fix_pixels)
    fix_vals = [float(values[r][c]) for c, r in fix_pixels]
    height = len(values)
    width = len(values[0])
    bg_vals = [
        float(values[r][c])
        for r in range(height)
        for c in range(width)
        if (c, r) not in fixed
    ]
    return _roc_area_reference(fix_vals, bg_vals)


def auc_shuffled_reference(values, fix_pixels, neg_pixels, seed=0):
    """ROC area vs sampled other-stimulus fixation pixels.

    The sampling convention (default_rng(seed).choice without
    replacement, capped at 100 negatives per fixation) is part of the
    metric definition, so the reference reproduces it.
    """
    fix_vals = [float(values[r][c]) for c, r in fix_pixels]
    neg_vals = [float(values[r][c]) for c, r in neg_pixels]
    n_sample = min(len(neg_vals), 100 * len(fix_vals))
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(neg_vals), size=n_sample, replace=False)
    return _roc_area_reference(fix_vals, [neg_vals[i] for i in picked])


def cc_reference(pred, gt):
    """Pearson correlation over pixels."""
    a = _flat(pred)
    b = _flat(gt)
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = sum((x - ma) ** 2 for x in a)
    db = sum((y - mb) ** 2 for y in b)
    return num / math.sqrt(da * db)


def sim_reference(pred, gt):
    """Sum of elementwise minima of two unit-sum maps."""
    return sum(
        min(float(p), float(q)) for prow, qrow in zip(pred, gt) for p, q in zip(prow, qrow)
    )
