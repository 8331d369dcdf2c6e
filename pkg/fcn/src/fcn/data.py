"""Loading images and target maps from disk.

Images come in as PNG files (grayscale or RGB), targets as 2-d float .npy
arrays named after the image stem. Nothing here resizes; the network wants
the dims it was built for and mismatches fail loudly downstream.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError

IMAGE_SUFFIXES = (".png",)


def load_image(path) -> np.ndarray:
    """Read one PNG as float64 in [0, 1], (H, W) for grayscale, (H, W, 3) for color."""
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB" if img.mode in ("P", "RGBA", "CMYK") else "L")
        arr = np.asarray(img, dtype=np.float64) / 255.0
    return arr


def list_images(directory) -> list:
    """Sorted image paths under a directory (non-recursive)."""
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(f"image directory not found: {root}")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ConfigError(f"no .png images under {root}")
    return paths


def load_image_dir(directory):
    """Load every PNG under a directory.

    Returns
    -------
    ids : list of str
        File stems, sorted.
    images : list of ndarray
    """
    paths = list_images(directory)
    return [p.stem for p in paths], [load_image(p) for p in paths]


def load_target(path) -> np.ndarray:
    """Read one 2-d nonnegative finite float map from .npy."""
    arr = np.load(path)
    if arr.ndim != 2:
        raise ConfigError(f"target {path} must be 2-d, got shape {arr.shape}")
    arr = arr.astype(np.float64)
    if not np.isfinite(arr).all():
        raise ConfigError(f"target {path} has non-finite values")
    if (arr < 0).any():
        raise ConfigError(f"target {path} has negative values")
    return arr


def normalize_target(arr: np.ndarray, mode: str) -> np.ndarray:
    """Scale a target map for the regression loss.

    mode "max" puts the peak at 1, mode "sum" makes the map a distribution.
    An all-zero map has no scale and is rejected.
    """
    if mode not in ("max", "sum"):
        raise ConfigError(f"target_norm must be 'max' or 'sum', got {mode!r}")
    scale = arr.max() if mode == "max" else arr.sum()
    if scale <= 0:
        raise ConfigError("target map is all zeros, cannot normalize")
    return arr / scale


def paired_dataset(images_dir, targets_dir, target_norm="max"):
    """Match images to targets by stem and load both sides.

    Returns
    -------
    ids : list of str
    images : list of ndarray
    targets : list of ndarray
        Normalized per target_norm; each must match its image's (H, W).
    """
    ids, images = load_image_dir(images_dir)
    troot = Path(targets_dir)
    if not troot.is_dir():
        raise ConfigError(f"target directory not found: {troot}")
    targets = []
    for name, image in zip(ids, images):
        tpath = troot / f"{name}.npy"
        if not tpath.is_file():
            raise ConfigError(f"no target map for image {name!r} (expected {tpath})")
        target = normalize_target(load_target(tpath), target_norm)
        if target.shape != image.shape[:2]:
            raise ConfigError(
                f"target {name!r} is {target.shape}, image is {image.shape[:2]}")
        targets.append(target)
    return ids, images, targets
