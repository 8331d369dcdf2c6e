"""Fixation data, rasterization, and Gaussian density maps.

Fixations arrive as CSV rows (stimulus_id, observer_id, x, y) in stimulus
pixel coordinates, x rightward and y downward, origin at the top-left
pixel center. Rasterization rounds half-up to the nearest pixel; density
maps are the rasters smoothed by an isotropic Gaussian, renormalized to
unit mass.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import (
    DomainError,
    EmptyInputError,
    ParseError,
    ValidationError,
)
from .imgio import quantize_u8

SUM_1 = "sum-1"
MAX_1 = "max-1"
RAW = "raw"

_NORM_TOL = 1e-6

# Fast path threshold: rasters with at most this many nonzero pixels are
# blurred by accumulating per-impulse kernel windows instead of dense
# band-matrix convolution. Both paths compute the same sums.
_SPARSE_NNZ_LIMIT = 64


@dataclass(frozen=True)
class FixationSet:
    """Fixations of one observer on one stimulus, in pixel coordinates."""

    stimulus_id: str
    observer_id: str
    points: np.ndarray = field(repr=False)  # (n, 2) float64, columns x, y
    stimulus_size: tuple[int, int] = (0, 0)  # (width, height)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        w, h = self.stimulus_size
        if w < 1 or h < 1:
            raise DomainError("stimulus_size must be positive")
        if pts.size:
            x, y = pts[:, 0], pts[:, 1]
            if x.min() < 0 or y.min() < 0 or x.max() >= w or y.max() >= h:
                raise ValidationError(
                    f"fixation outside {w}x{h} stimulus "
                    f"({self.stimulus_id!r}/{self.observer_id!r})"
                )

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class DensityMap:
    """A nonnegative saliency/fixation density raster with a stated scaling."""

    width: int
    height: int
    values: np.ndarray = field(repr=False)  # (height, width) float64
    normalization: str = RAW

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.height, self.width):
            raise DomainError(f"values shape {vals.shape} does not match (h, w)")
        if not np.all(np.isfinite(vals)) or vals.min() < 0:
            raise DomainError("density values must be finite and nonnegative")
        if self.normalization == SUM_1:
            if abs(vals.sum() - 1.0) > _NORM_TOL:
                raise ValidationError("sum-1 map does not sum to 1")
        elif self.normalization == MAX_1:
            if abs(vals.max(initial=0.0) - 1.0) > _NORM_TOL:
                raise ValidationError("max-1 map does not peak at 1")
        elif self.normalization != RAW:
            raise DomainError(f"unknown normalization {self.normalization!r}")

    @classmethod
    def from_values(cls, values, normalization=RAW):
        values = np.asarray(values, dtype=np.float64)
        return cls(values.shape[1], values.shape[0], values, normalization)

    def to_sum1(self) -> "DensityMap":
        total = self.values.sum()
        if total <= 0:
            raise EmptyInputError("cannot normalize an all-zero map to unit sum")
        return DensityMap(self.width, self.height, self.values / total, SUM_1)

    def to_max1(self) -> "DensityMap":
        peak = self.values.max(initial=0.0)
        if peak <= 0:
            raise EmptyInputError("cannot normalize an all-zero map to unit max")
        return DensityMap(self.width, self.height, self.values / peak, MAX_1)


@dataclass(frozen=True)
class BlurSpec:
    """Gaussian smoothing parameters for density estimation."""

    sigma: float
    domain: str = "spatial"

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0.5:
            raise DomainError(f"sigma must be >= 0.5, got {self.sigma}")
        if self.domain not in ("fourier", "spatial"):
            raise DomainError(f"unknown blur domain {self.domain!r}")


_HEADER = ("stimulus_id", "observer_id", "x", "y")


def parse_fixations(source, sizes) -> list[FixationSet]:
    """Read a fixation CSV into per-(stimulus, observer) FixationSets.

    Parameters
    ----------
    source : path or iterable of lines
        CSV with header stimulus_id,observer_id,x,y. Lines starting with
        '#' and blank lines are skipped. No quoting; ids must not contain
        commas.
    sizes : mapping stimulus_id -> (width, height)
        Used to bounds-check coordinates; an unknown stimulus is a
        ValidationError.

    Sets come back in first-appearance order. Malformed rows raise
    ParseError with the 1-based line number.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)

    groups: dict[tuple[str, str], list] = {}
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if not header_seen:
            if tuple(cells) != _HEADER:
                raise ParseError(
                    f"expected header {','.join(_HEADER)}, got {line!r}", line=lineno
                )
            header_seen = True
            continue
        if len(cells) != 4:
            raise ParseError(f"expected 4 fields, got {len(cells)}", line=lineno)
        stim, obs, xs, ys = cells
        if not stim or not obs:
            raise ParseError("empty stimulus or observer id", line=lineno)
        try:
            x, y = float(xs), float(ys)
        except ValueError:
            raise ParseError(f"non-numeric coordinate {xs!r},{ys!r}", line=lineno) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ParseError("non-finite coordinate", line=lineno)
        if stim not in sizes:
            raise ValidationError(f"line {lineno}: unknown stimulus {stim!r}")
        w, h = sizes[stim]
        if not (0 <= x < w and 0 <= y < h):
            raise ValidationError(
                f"line {lineno}: fixation ({x}, {y}) outside {w}x{h} stimulus {stim!r}"
            )
        groups.setdefault((stim, obs), []).append((x, y))
    if not header_seen:
        raise ParseError("no header row found")

    return [
        FixationSet(stim, obs, np.array(pts, dtype=np.float64), tuple(sizes[stim]))
        for (stim, obs), pts in groups.items()
    ]


def write_fixations(sets, path):
    """Write FixationSets back out in the canonical CSV layout."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(_HEADER) + "\n")
        for fx in sets:
            for x, y in fx.points:
                # float() first: numpy scalars repr as np.float64(...)
                fh.write(f"{fx.stimulus_id},{fx.observer_id},{float(x)!r},{float(y)!r}\n")


def rescale_fixations(fx: FixationSet, size: tuple[int, int]) -> FixationSet:
    """Map fixations into a different raster size by per-axis scaling."""
    nw, nh = size
    if nw < 1 or nh < 1:
        raise DomainError("target size must be positive")
    ow, oh = fx.stimulus_size
    pts = fx.points * np.array([nw / ow, nh / oh])
    # Scaling is exact at the low edge; guard the high edge against roundoff.
    pts = np.minimum(pts, np.nextafter([float(nw), float(nh)], -np.inf))
    return FixationSet(fx.stimulus_id, fx.observer_id, pts, (nw, nh))


def aggregate(sets) -> FixationSet:
    """Pool several observers' fixations on one stimulus into a single set."""
    sets = list(sets)
    if not sets:
        raise EmptyInputError("no fixation sets to aggregate")
    first = sets[0]
    for fx in sets[1:]:
        if fx.stimulus_id != first.stimulus_id or fx.stimulus_size != first.stimulus_size:
            raise ValidationError("aggregate needs sets from one stimulus")
    pts = np.concatenate([fx.points for fx in sets], axis=0)
    return FixationSet(first.stimulus_id, "pooled", pts, first.stimulus_size)


def fixation_pixels(fx: FixationSet):
    """Integer pixel indices (cols, rows) of fixations, round half-up, clipped."""
    w, h = fx.stimulus_size
    cols = np.clip(np.floor(fx.points[:, 0] + 0.5).astype(np.int64), 0, w - 1)
    rows = np.clip(np.floor(fx.points[:, 1] + 0.5).astype(np.int64), 0, h - 1)
    return cols, rows


def rasterize(fx: FixationSet) -> DensityMap:
    """Count fixations per pixel; output is a raw map summing to len(fx)."""
    if len(fx) == 0:
        raise EmptyInputError("cannot rasterize an empty fixation set")
    w, h = fx.stimulus_size
    cols, rows = fixation_pixels(fx)
    values = np.zeros((h, w), dtype=np.float64)
    np.add.at(values, (rows, cols), 1.0)
    return DensityMap(w, h, values, RAW)


def _gauss_kernel(sigma):
    radius = int(np.ceil(4.0 * sigma))
    g = np.exp(-np.arange(-radius, radius + 1) ** 2 / (2.0 * sigma * sigma))
    return g / g.sum(), radius


def _blur_spatial(values, sigma):
    g, radius = _gauss_kernel(sigma)
    h, w = values.shape
    rows, cols = np.nonzero(values)
    if 0 < len(rows) <= _SPARSE_NNZ_LIMIT:
        out = np.zeros_like(values)
        for r, c in zip(rows, cols):
            y0, y1 = max(r - radius, 0), min(r + radius + 1, h)
            x0, x1 = max(c - radius, 0), min(c + radius + 1, w)
            ky = g[y0 - r + radius : y1 - r + radius]
            kx = g[x0 - c + radius : x1 - c + radius]
            out[y0:y1, x0:x1] += values[r, c] * np.outer(ky, kx)
        return out
    # Dense path: banded convolution matrices, zero beyond the borders.
    idx_h = np.arange(h)
    idx_w = np.arange(w)
    gy = np.zeros((h, h))
    gx = np.zeros((w, w))
    dy = np.abs(idx_h[:, None] - idx_h[None, :])
    dx = np.abs(idx_w[:, None] - idx_w[None, :])
    gy[dy <= radius] = g[dy[dy <= radius] + radius]
    gx[dx <= radius] = g[dx[dx <= radius] + radius]
    return gy @ values @ gx.T


def _blur_fourier(values, sigma):
    pad = int(np.ceil(4.0 * sigma))
    h, w = values.shape
    padded = np.zeros((h + 2 * pad, w + 2 * pad))
    padded[pad : pad + h, pad : pad + w] = values
    fy = np.fft.fftfreq(padded.shape[0])[:, None]
    fx = np.fft.rfftfreq(padded.shape[1])[None, :]
    transfer = np.exp(-2.0 * np.pi**2 * sigma**2 * (fy**2 + fx**2))
    spectrum = np.fft.rfft2(padded) * transfer
    blurred = np.fft.irfft2(spectrum, s=padded.shape)
    return blurred[pad : pad + h, pad : pad + w]


def blur_values(values, spec: BlurSpec):
    """Gaussian-smooth a raw array without renormalization.

    Exposed separately from blur_density because linearity only holds
    before the unit-sum renormalization step.
    """
    values = np.asarray(values, dtype=np.float64)
    if spec.domain == "fourier":
        return _blur_fourier(values, spec.sigma)
    return _blur_spatial(values, spec.sigma)


def blur_density(m: DensityMap, spec: BlurSpec) -> DensityMap:
    """Smooth a density map and renormalize it to unit mass."""
    if m.values.sum() <= 0:
        raise EmptyInputError("cannot blur an all-zero map")
    out = blur_values(m.values, spec)
    # FFT roundoff can leave tiny negative values; clip before renormalizing.
    out = np.clip(out, 0.0, None)
    return DensityMap(m.width, m.height, out / out.sum(), SUM_1)


def save_density(m: DensityMap, path):
    """Dump map values to NPY (float64, exact round-trip)."""
    np.save(path, m.values, allow_pickle=False)


def load_density(path, normalization=None) -> DensityMap:
    """Load an NPY density map; the scaling tag is inferred unless given."""
    values = np.load(path, allow_pickle=False)
    if values.ndim != 2:
        raise ParseError(f"{os.fspath(path)}: expected a 2-d array")
    if normalization is None:
        if abs(values.sum() - 1.0) <= _NORM_TOL:
            normalization = SUM_1
        elif values.size and abs(values.max() - 1.0) <= _NORM_TOL:
            normalization = MAX_1
        else:
            normalization = RAW
    return DensityMap.from_values(values, normalization)


def density_to_png(m: DensityMap, path):
    """Write a max-1 scaled 8-bit grayscale PNG for eyeballing."""
    scaled = m.to_max1() if m.values.max(initial=0.0) > 0 else m
    Image.fromarray(quantize_u8(scaled.values), mode="L").save(path, format="PNG")
