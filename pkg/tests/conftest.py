import numpy as np
import pytest

from salpres.fixmap import DensityMap, FixationSet
from salpres.imaging import RasterImage


def image_from(arr, encoding="linear"):
    """RasterImage from a (h, w) or (h, w, 3) array, no questions asked."""
    return RasterImage.from_array(np.asarray(arr, dtype=np.float64), encoding=encoding)


def raw_map(arr):
    return DensityMap.from_values(np.asarray(arr, dtype=np.float64), "raw")


def sum1_map(arr):
    a = np.asarray(arr, dtype=np.float64)
    return DensityMap.from_values(a / a.sum(), "sum-1")


def fixset(points, size, stimulus="stim", observer="obs"):
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return FixationSet(stimulus_id=stimulus, observer_id=observer, points=pts, stimulus_size=size)


def random_sum1(rng, h, w):
    vals = rng.random((h, w))
    return DensityMap.from_values(vals / vals.sum(), "sum-1")


def random_metric_instance(seed, size=32):
    """One randomized scoring problem: a map, fixations, negatives.

    Fixation points sit on exact integer pixel centers so the package
    route and the loop-based reference route see identical pixel sets.
    Returns things both routes can consume.
    """
    rng = np.random.default_rng(seed)
    values = rng.random((size, size))
    n_fix = int(rng.integers(3, 41))
    n_neg = int(rng.integers(50, 401))

    def pick(n):
        flat = rng.choice(size * size, size=n, replace=False)
        return [(int(i % size), int(i // size)) for i in flat]  # (col, row)

    fix_px = pick(n_fix)
    neg_px = pick(n_neg)
    fix = fixset([(c, r) for c, r in fix_px], (size, size))
    neg = fixset([(c, r) for c, r in neg_px], (size, size), observer="others")

    gt_vals = rng.random((size, size))
    pred_s = DensityMap.from_values(values / values.sum(), "sum-1")
    gt_s = DensityMap.from_values(gt_vals / gt_vals.sum(), "sum-1")
    return {
        "map": DensityMap.from_values(values, "raw"),
        "fix": fix,
        "neg": neg,
        "fix_px": fix_px,
        "neg_px": neg_px,
        "pred_s": pred_s,
        "gt_s": gt_s,
        "sauc_seed": int(rng.integers(0, 2**31)),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
