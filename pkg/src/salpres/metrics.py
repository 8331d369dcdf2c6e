"""Saliency metrics in the MIT benchmark conventions.

Location-based metrics (nss, auc_judd, auc_shuffled) compare a saliency
map against discrete fixations; distribution-based metrics (kl, cc, sim)
compare two maps. kl and sim require unit-sum maps. score_pair bundles
all six for one prediction/ground-truth pair, surfacing degenerate cases
as flags instead of exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMapError, EmptyInputError, ValidationError
from .fixmap import SUM_1, DensityMap, FixationSet, fixation_pixels

# Machine epsilon regularizer in the kl ratio, per the reference scripts.
KL_EPS = float(np.finfo(np.float64).eps)

# Column order for every serialized metric report.
METRIC_FIELDS = ("nss", "kl", "auc_judd", "auc_shuffled", "cc", "sim")

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class MetricReport:
    """One row of metric scores; NaN plus a flag marks a skipped metric."""

    nss: float
    kl: float
    auc_judd: float
    auc_shuffled: float
    cc: float
    sim: float
    flags: tuple[str, ...] = ()

    def values(self):
        return tuple(getattr(self, name) for name in METRIC_FIELDS)

    def to_dict(self):
        out = {name: getattr(self, name) for name in METRIC_FIELDS}
        out["flags"] = list(self.flags)
        return out


def _require_same_dims(a, b, what):
    if (a.width, a.height) != (b.width, b.height):
        raise ValidationError(
            f"{what}: map dims {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def _fixation_values(sal: DensityMap, fx: FixationSet, what):
    if (sal.width, sal.height) != tuple(fx.stimulus_size):
        raise ValidationError(
            f"{what}: map is {sal.width}x{sal.height}, fixations are on "
            f"{fx.stimulus_size[0]}x{fx.stimulus_size[1]}"
        )
    if len(fx) == 0:
        raise EmptyInputError(f"{what}: empty fixation set")
    cols, rows = fixation_pixels(fx)
    return sal.values[rows, cols]


def nss(sal: DensityMap, fx: FixationSet) -> float:
    """Mean z-scored saliency at fixations (population standard deviation)."""
    vals = _fixation_values(sal, fx, "nss")
    std = sal.values.std()
    # A literally constant map can still report std ~1e-17 (the mean picks
    # up rounding), so check constancy directly instead of trusting std.
    if std == 0 or sal.values.max() == sal.values.min():
        raise DegenerateMapError("nss: constant saliency map has no z-scores")
    return float((vals - sal.values.mean()).sum() / (std * len(vals)))


def kl(pred: DensityMap, gt: DensityMap) -> float:
    """Divergence of the ground truth from the prediction, in nats.

    Both maps must be sum-1. The epsilon guards follow the benchmark
    convention; they make the identity case land at ~ -1e-12, which is
    clamped to 0 so the result is always nonnegative.
    """
    _require_same_dims(pred, gt, "kl")
    if pred.normalization != SUM_1 or gt.normalization != SUM_1:
        raise ValidationError("kl requires sum-1 maps on both sides")
    q = gt.values
    p = pred.values
    raw = float(np.sum(q * np.log(KL_EPS + q / (p + KL_EPS))))
    return max(raw, 0.0)


def _roc_area(fix_vals, bg_vals):
    """Area under TP/FP rates thresholded at each distinct fixation value."""
    thresholds = np.unique(fix_vals)[::-1]
    tp = (fix_vals[None, :] >= thresholds[:, None]).mean(axis=1)
    fp = (bg_vals[None, :] >= thresholds[:, None]).mean(axis=1)
    tp = np.concatenate(([0.0], tp, [1.0]))
    fp = np.concatenate(([0.0], fp, [1.0]))
    return float(_trapezoid(tp, fp))


def auc_judd(sal: DensityMap, fx: FixationSet) -> float:
    """ROC area with all non-fixated pixels as the negative class."""
    vals = _fixation_values(sal, fx, "auc_judd")
    mask = np.ones(sal.values.shape, dtype=bool)
    cols, rows = fixation_pixels(fx)
    mask[rows, cols] = False
    bg = sal.values[mask]
    if bg.size == 0:
        raise ValidationError("auc_judd: every pixel is fixated")
    return _roc_area(vals, bg)


def auc_shuffled(sal: DensityMap, fx: FixationSet, negatives: FixationSet, seed: int = 0) -> float:
    """ROC area against fixations borrowed from other stimuli.

    negatives must already be rescaled to the map's raster. At most
    100 * len(fx) negatives are used, sampled without replacement from a
    seeded generator so scores are reproducible.
    """
    vals = _fixation_values(sal, fx, "auc_shuffled")
    if len(negatives) == 0:
        raise ValidationError("auc_shuffled: empty negative set")
    neg_vals = _fixation_values(sal, negatives, "auc_shuffled negatives")
    n_sample = min(len(neg_vals), 100 * len(vals))
    rng = np.random.default_rng(seed)
    neg_vals = neg_vals[rng.choice(len(neg_vals), size=n_sample, replace=False)]
    return _roc_area(vals, neg_vals)


def cc(pred: DensityMap, gt: DensityMap) -> float:
    """Pearson correlation between two maps over all pixels."""
    _require_same_dims(pred, gt, "cc")
    a = pred.values - pred.values.mean()
    b = gt.values - gt.values.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    # Same constancy caveat as nss: an inexact mean can leave denom > 0
    # for a map whose entries are all bitwise equal.
    if denom == 0 or pred.values.max() == pred.values.min() or gt.values.max() == gt.values.min():
        raise DegenerateMapError("cc: a constant map has no correlation")
    return float((a * b).sum() / denom)


def sim(pred: DensityMap, gt: DensityMap) -> float:
    """Histogram intersection of two unit-sum maps (1 = identical)."""
    _require_same_dims(pred, gt, "sim")
    if pred.normalization != SUM_1 or gt.normalization != SUM_1:
        raise ValidationError("sim requires sum-1 maps on both sides")
    return float(np.minimum(pred.values, gt.values).sum())


def score_pair(
    pred: DensityMap,
    gt_fix: FixationSet,
    gt_map: DensityMap,
    negatives: FixationSet | None = None,
    seed: int = 0,
) -> MetricReport:
    """Score one prediction against fixations and their density map.

    Location metrics use gt_fix, distribution metrics use gt_map (both
    sides renormalized to unit sum as needed). Degenerate metrics come
    back as NaN with a flag rather than raising, so batch runs keep going.
    Dimension mismatches surface from the first affected metric, which
    names itself in the error.
    """
    flags = []

    try:
        nss_v = nss(pred, gt_fix)
    except DegenerateMapError:
        nss_v = float("nan")
        flags.append("nss:degenerate-map")

    pred_s = pred.to_sum1()
    gt_s = gt_map.to_sum1()
    kl_v = kl(pred_s, gt_s)
    sim_v = sim(pred_s, gt_s)

    judd_v = auc_judd(pred, gt_fix)
    if negatives is None or len(negatives) == 0:
        shuffled_v = float("nan")
        flags.append("auc_shuffled:no-negatives")
    else:
        shuffled_v = auc_shuffled(pred, gt_fix, negatives, seed=seed)

    try:
        cc_v = cc(pred, gt_map)
    except DegenerateMapError:
        cc_v = float("nan")
        flags.append("cc:degenerate-map")

    return MetricReport(
        nss=nss_v,
        kl=kl_v,
        auc_judd=judd_v,
        auc_shuffled=shuffled_v,
        cc=cc_v,
        sim=sim_v,
        flags=tuple(flags),
    )
