"""Colorimetry and resampling primitives for the HC -> LG image transform.

All images travel as RasterImage: float64 data in [0, 1], row-major,
shape (h, w) for single-channel or (h, w, 3) for color, tagged with the
encoding of the stored values ("srgb-gamma" or "linear"). The transform
chain is: gamma expansion, Rec. 709 luminance, then a blur/halve cascade
down to the target height with a bicubic finish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ImageTypeError

SRGB_GAMMA = "srgb-gamma"
LINEAR = "linear"

# Breakpoints of the piecewise sRGB transfer function.
_SRGB_KNEE = 0.04045
_LINEAR_KNEE = _SRGB_KNEE / 12.92

# Rec. 709 luma coefficients, applied to linear components.
_LUMA_R = 0.2126
_LUMA_G = 0.7152
_LUMA_B = 0.0722

# 5x5 binomial low-pass kernel; element sum is 54, divided out once after
# accumulation so the filter has unity DC gain.
BINOMIAL_KERNEL = np.array(
    [
        [1, 1, 1, 1, 1],
        [1, 4, 4, 4, 1],
        [1, 4, 6, 4, 1],
        [1, 4, 4, 4, 1],
        [1, 1, 1, 1, 1],
    ],
    dtype=np.float64,
)
BINOMIAL_KERNEL_SUM = 54.0


@dataclass(frozen=True)
class RasterImage:
    """An in-memory image: float64 values in [0, 1], row-major."""

    width: int
    height: int
    channels: int
    data: np.ndarray = field(repr=False)
    encoding: str = SRGB_GAMMA

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ImageTypeError(f"channels must be 1 or 3, got {self.channels}")
        if self.encoding not in (SRGB_GAMMA, LINEAR):
            raise DomainError(f"unknown encoding {self.encoding!r}")
        expected = (self.height, self.width) if self.channels == 1 else (self.height, self.width, 3)
        if self.data.shape != expected:
            raise DomainError(f"data shape {self.data.shape} does not match {expected}")
        if self.width < 1 or self.height < 1:
            raise DomainError("image dimensions must be positive")
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise DomainError("pixel values must lie in [0, 1]")

    @classmethod
    def from_array(cls, arr, encoding=SRGB_GAMMA):
        """Wrap a (h, w) or (h, w, 3) float array as a RasterImage."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            channels = 1
        elif arr.ndim == 3 and arr.shape[2] == 3:
            channels = 3
        else:
            raise ImageTypeError(f"expected (h, w) or (h, w, 3) array, got shape {arr.shape}")
        return cls(
            width=arr.shape[1],
            height=arr.shape[0],
            channels=channels,
            data=arr,
            encoding=encoding,
        )

    def with_data(self, data, encoding=None):
        """New image with replaced pixel data (dims inferred from the array)."""
        return RasterImage.from_array(data, self.encoding if encoding is None else encoding)


@dataclass(frozen=True)
class ResizePolicy:
    """How downsample_to_height picks the output raster size.

    aspect_mode "preserve" derives the width from the source aspect ratio;
    "fixed-width" forces the given width regardless of aspect.
    """

    target_height: int = 64
    aspect_mode: str = "preserve"
    width: int | None = None

    def __post_init__(self):
        if self.target_height < 1:
            raise DomainError("target_height must be >= 1")
        if self.aspect_mode not in ("preserve", "fixed-width"):
            raise DomainError(f"unknown aspect_mode {self.aspect_mode!r}")
        if self.aspect_mode == "fixed-width":
            if self.width is None or self.width < 1:
                raise DomainError("fixed-width mode needs a positive width")
        elif self.width is not None:
            raise DomainError("width is only meaningful in fixed-width mode")

    def output_size(self, src_width, src_height):
        """(width, height) the policy produces for a given source size."""
        if src_height < self.target_height:
            raise DomainError(
                f"source height {src_height} is below target {self.target_height}; upscaling is out of scope"
            )
        if self.aspect_mode == "fixed-width":
            return self.width, self.target_height
        w = int(round(src_width * self.target_height / src_height))
        return max(w, 1), self.target_height


def _check_unit_range(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise DomainError("values outside [0, 1]")
    return values


def gamma_expand(values):
    """sRGB gamma-encoded values -> linear light.

    Piecewise transfer: v/12.92 below the knee, ((v+0.055)/1.055)**2.4
    above. Accepts scalars or arrays in [0, 1]; raises DomainError outside.
    """
    arr = _check_unit_range(values)
    out = np.where(arr <= _SRGB_KNEE, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    if np.isscalar(values) or np.ndim(values) == 0:
        return float(out)
    return out


def gamma_compress(values):
    """Linear-light values -> sRGB gamma encoding (inverse of gamma_expand)."""
    arr = _check_unit_range(values)
    out = np.where(arr <= _LINEAR_KNEE, arr * 12.92, 1.055 * arr ** (1.0 / 2.4) - 0.055)
    # The power branch can dip a hair below 0 at the knee from roundoff.
    out = np.clip(out, 0.0, 1.0)
    if np.isscalar(values) or np.ndim(values) == 0:
        return float(out)
    return out


def srgb_to_luminance(img: RasterImage) -> RasterImage:
    """Collapse a gamma-encoded color image to linear Rec. 709 luminance.

    Gamma expansion happens first so the weighted sum acts on linear
    light. Channel order is fixed to summation left to right, which keeps
    pure white at exactly 1.0 in float64.
    """
    if img.channels != 3:
        raise ImageTypeError("srgb_to_luminance needs a 3-channel image")
    if img.encoding != SRGB_GAMMA:
        raise ImageTypeError("srgb_to_luminance expects srgb-gamma input")
    lin = gamma_expand(img.data)
    lum = lin[..., 0] * _LUMA_R + lin[..., 1] * _LUMA_G + lin[..., 2] * _LUMA_B
    lum = np.clip(lum, 0.0, 1.0)
    return RasterImage.from_array(lum, encoding=LINEAR)


def binomial_blur(img: RasterImage) -> RasterImage:
    """5x5 binomial low-pass with replicate padding; dims are unchanged.

    Implemented as 25 weighted shifts of the edge-padded array, summed
    then divided by the kernel sum once, so a constant image is exactly
    preserved up to a final [0, 1] clip.
    """
    if img.channels != 1:
        raise ImageTypeError("binomial_blur operates on single-channel images")
    padded = np.pad(img.data, 2, mode="edge")
    h, w = img.data.shape
    acc = np.zeros((h, w), dtype=np.float64)
    for dy in range(5):
        for dx in range(5):
            acc += BINOMIAL_KERNEL[dy, dx] * padded[dy : dy + h, dx : dx + w]
    acc /= BINOMIAL_KERNEL_SUM
    return img.with_data(np.clip(acc, 0.0, 1.0))


def _cubic_kernel(d):
    """Catmull-Rom cubic (a = -0.5) evaluated at signed distances d."""
    u = np.abs(d)
    u2 = u * u
    u3 = u2 * u
    near = 1.5 * u3 - 2.5 * u2 + 1.0
    far = -0.5 * u3 + 2.5 * u2 - 4.0 * u + 2.0
    return np.where(u <= 1.0, near, np.where(u < 2.0, far, 0.0))


def _resample_matrix(n_in, n_out):
    """Dense (n_out, n_in) bicubic weight matrix with replicate edges.

    Output sample centers map to input coordinates via the half-pixel
    convention x = (i + 0.5) * n_in / n_out - 0.5. Four taps per output;
    tap indices clip at the borders (replicate), and each row is
    renormalized to kill float drift in the analytic unit row sum.
    """
    scale = n_in / n_out
    x = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    base = np.floor(x).astype(np.int64)
    taps = base[:, None] + np.arange(-1, 3)[None, :]
    weights = _cubic_kernel(x[:, None] - taps)
    weights /= weights.sum(axis=1, keepdims=True)
    taps = np.clip(taps, 0, n_in - 1)
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    # Clipped taps can collide at the borders, so accumulate rather than assign.
    np.add.at(mat, (np.repeat(np.arange(n_out), 4), taps.ravel()), weights.ravel())
    return mat


def resize_bicubic(img: RasterImage, out_width: int, out_height: int) -> RasterImage:
    """Separable Catmull-Rom resampling to an arbitrary output size."""
    if out_width < 1 or out_height < 1:
        raise DomainError("output dimensions must be positive")
    wy = _resample_matrix(img.height, out_height)
    wx = _resample_matrix(img.width, out_width)
    if img.channels == 1:
        out = wy @ img.data @ wx.T
    else:
        out = np.tensordot(wy, img.data, axes=(1, 0))
        out = np.tensordot(out, wx, axes=(1, 1)).transpose(0, 2, 1)
    # Catmull-Rom overshoots on hard edges; results stay displayable.
    return img.with_data(np.clip(out, 0.0, 1.0))


def downsample_to_height(img: RasterImage, policy: ResizePolicy | None = None) -> RasterImage:
    """Blur/halve cascade down to the policy height, bicubic at each step.

    While the current height is at least twice the target, the image is
    binomial-blurred and resized to ceil(h/2) x ceil(w/2). A final resize
    lands exactly on the policy's output size; at the target height the
    whole function is the identity under a preserve-aspect policy.
    """
    if img.channels != 1:
        raise ImageTypeError("downsample_to_height operates on single-channel images")
    policy = policy or ResizePolicy()
    out_w, out_h = policy.output_size(img.width, img.height)
    cur = img
    while cur.height >= 2 * policy.target_height:
        cur = binomial_blur(cur)
        cur = resize_bicubic(cur, (cur.width + 1) // 2, (cur.height + 1) // 2)
    if (cur.width, cur.height) != (out_w, out_h):
        cur = resize_bicubic(cur, out_w, out_h)
    return cur


def hc_to_lg(img: RasterImage, policy: ResizePolicy | None = None) -> RasterImage:
    """Full high-color -> low-gray transform: luminance, then the cascade."""
    return downsample_to_height(srgb_to_luminance(img), policy)
