"""Saliency-preservation benchmarking for aggressively downscaled images.

The package turns full-color stimuli into tiny grayscale previews,
estimates fixation density maps, scores saliency agreement with the six
standard metrics, and runs the paired experiments that check whether the
previews preserve where people look.
"""

from .errors import (
    DegenerateMapError,
    DomainError,
    EmptyInputError,
    ImageTypeError,
    ParseError,
    SalpresError,
    ValidationError,
)
from .fixmap import (
    BlurSpec,
    DensityMap,
    FixationSet,
    aggregate,
    blur_density,
    parse_fixations,
    rasterize,
    rescale_fixations,
)
from .imaging import (
    RasterImage,
    ResizePolicy,
    binomial_blur,
    downsample_to_height,
    gamma_compress,
    gamma_expand,
    hc_to_lg,
    resize_bicubic,
    srgb_to_luminance,
)
from .metrics import (
    METRIC_FIELDS,
    MetricReport,
    auc_judd,
    auc_shuffled,
    cc,
    kl,
    nss,
    score_pair,
    sim,
)
from .stats import TestResult, median, one_way_anova, paired_t_test

__version__ = "0.1.0"

__all__ = [
    "BlurSpec",
    "DensityMap",
    "DegenerateMapError",
    "DomainError",
    "EmptyInputError",
    "FixationSet",
    "ImageTypeError",
    "METRIC_FIELDS",
    "MetricReport",
    "ParseError",
    "RasterImage",
    "ResizePolicy",
    "SalpresError",
    "TestResult",
    "ValidationError",
    "aggregate",
    "auc_judd",
    "auc_shuffled",
    "binomial_blur",
    "blur_density",
    "cc",
    "downsample_to_height",
    "gamma_compress",
    "gamma_expand",
    "hc_to_lg",
    "kl",
    "median",
    "nss",
    "one_way_anova",
    "paired_t_test",
    "parse_fixations",
    "rasterize",
    "rescale_fixations",
    "resize_bicubic",
    "score_pair",
    "sim",
    "srgb_to_luminance",
]
