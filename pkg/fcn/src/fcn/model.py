"""Encoder-decoder network for single-map saliency prediction.

The encoder is a stack of strided convolutions, the decoder mirrors it
with transposed convolutions so the output grid matches the input grid
exactly, and a 1x1 convolution with a sigmoid produces one map in (0, 1).
Everything runs on CPU float32 unless the caller moves or casts the model.
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, ShapeError

# (filters, kernel_w, kernel_h, stride) per stage
DEFAULT_ENCODER = ((32, 3, 3, 2), (64, 3, 3, 2), (128, 3, 3, 2), (256, 3, 3, 2))


@dataclass(frozen=True)
class FcnSpec:
    """Architecture description.

    Parameters
    ----------
    encoder : sequence of (filters, kernel_w, kernel_h, stride)
        One entry per downsampling stage. Kernels must be odd so the
        mirrored transposed stage restores the exact input size.
    """

    encoder: tuple = DEFAULT_ENCODER

    def __post_init__(self):
        try:
            stages = tuple(tuple(int(v) for v in stage) for stage in self.encoder)
        except (TypeError, ValueError):
            raise ConfigError("encoder must be a sequence of (filters, kernel_w, kernel_h, stride)")
        if not stages:
            raise ConfigError("encoder needs at least one stage")
        for stage in stages:
            if len(stage) != 4:
                raise ConfigError("stage format is (filters, kernel_w, kernel_h, stride)")
            filters, kw, kh, stride = stage
            if filters < 1:
                raise ConfigError("filters must be >= 1")
            if stride < 1:
                raise ConfigError("stride must be >= 1")
            if kw < 1 or kh < 1 or kw % 2 == 0 or kh % 2 == 0:
                # even kernels cannot be undone exactly by the mirrored stage
                raise ConfigError("kernels must be positive odd sizes")
        object.__setattr__(self, "encoder", stages)

    @property
    def stride_product(self) -> int:
        out = 1
        for _, _, _, stride in self.encoder:
            out *= stride
        return out


class FcnModel(nn.Module):
    """The actual network. Build through build_model, not directly."""

    def __init__(self, spec: FcnSpec, input_dims):
        super().__init__()
        self.spec = spec
        self.input_dims = tuple(int(v) for v in input_dims)
        layers = []
        chans = self.input_dims[2]
        for filters, kw, kh, stride in spec.encoder:
            layers.append(nn.Conv2d(chans, filters, (kh, kw), stride=stride,
                                    padding=(kh // 2, kw // 2)))
            layers.append(nn.ReLU(inplace=True))
            chans = filters
        stages = spec.encoder
        for i in range(len(stages) - 1, -1, -1):
            filters, kw, kh, stride = stages[i]
            # walk the channel ladder back down; the lowest stage keeps its width
            out_ch = stages[i - 1][0] if i > 0 else stages[0][0]
            layers.append(nn.ConvTranspose2d(filters, out_ch, (kh, kw), stride=stride,
                                             padding=(kh // 2, kw // 2),
                                             output_padding=stride - 1))
            layers.append(nn.ReLU(inplace=True))
            chans = out_ch
        layers.append(nn.Conv2d(chans, 1, 1))
        layers.append(nn.Sigmoid())
        self.body = nn.Sequential(*layers)

    def forward(self, x):  # x: (N, C, H, W)
        return self.body(x)

    def predict_map(self, image) -> np.ndarray:
        """Run one image through the net.

        Parameters
        ----------
        image : ndarray, (H, W, C) or (H, W)
            Pixel data in [0, 1]; dims must match the build dims.

        Returns
        -------
        ndarray, (H, W, 1) float64
        """
        x = to_input_tensor(image, self.input_dims)
        was_training = self.training
        self.eval()
        with torch.no_grad():
            y = self.body(x)
        if was_training:
            self.train()
        return y[0, 0].numpy().astype(np.float64)[..., None]


def to_input_tensor(image, input_dims) -> torch.Tensor:
    """Validate one image against the model dims and lay it out as (1, C, H, W)."""
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3:
        raise ShapeError(f"expected an (H, W, C) image, got ndim={arr.ndim}")
    if tuple(arr.shape) != tuple(input_dims):
        raise ShapeError(
            f"image dims {tuple(arr.shape)} do not match model dims {tuple(input_dims)}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))[None]


def build_model(spec: FcnSpec, input_dims, seed=None) -> FcnModel:
    """Construct the network for a fixed input size.

    Parameters
    ----------
    spec : FcnSpec
    input_dims : (height, width, channels)
        Height and width must be divisible by the product of the encoder
        strides, otherwise the decoder cannot land back on the input grid.
    seed : int, optional
        Seeds torch's global generator before the weights are drawn, so the
        same (spec, dims, seed) always gives the same initial weights.
    """
    if len(tuple(input_dims)) != 3:
        raise ShapeError("input_dims must be (height, width, channels)")
    h, w, c = (int(v) for v in input_dims)
    if h < 1 or w < 1 or c < 1:
        raise ShapeError("input dims must be positive")
    prod = spec.stride_product
    if h % prod or w % prod:
        raise ShapeError(
            f"input {h}x{w} is not divisible by the total stride {prod}")
    if seed is not None:
        torch.manual_seed(seed)
    return FcnModel(spec, (h, w, c))


def predict_batch(model: FcnModel, images) -> np.ndarray:
    """Forward a stack of images, returning (N, H, W, 1) float64 maps."""
    xs = torch.cat([to_input_tensor(im, model.input_dims) for im in images], dim=0)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        y = model(xs)
    if was_training:
        model.train()
    return y[:, 0].numpy().astype(np.float64)[..., None]


def count_flops(spec: FcnSpec, input_dims) -> int:
    """Static flop count for one forward pass.

    Every convolution (regular or transposed) is charged 2*kh*kw*c_in*c_out
    flops per output pixel (multiply + add), the 1x1 head likewise, and the
    activations are ignored. Uses plain conv floor arithmetic, so it works
    for dims that build_model would reject; for divisible dims the deconv
    output matches the mirrored conv input exactly.
    """
    if len(tuple(input_dims)) != 3:
        raise ShapeError("input_dims must be (height, width, channels)")
    h, w, chans = (int(v) for v in input_dims)
    if h < 1 or w < 1 or chans < 1:
        raise ShapeError("input dims must be positive")
    total = 0
    for filters, kw, kh, stride in spec.encoder:
        oh = (h + 2 * (kh // 2) - kh) // stride + 1
        ow = (w + 2 * (kw // 2) - kw) // stride + 1
        total += 2 * kh * kw * chans * filters * oh * ow
        h, w, chans = oh, ow, filters
    stages = spec.encoder
    for i in range(len(stages) - 1, -1, -1):
        filters, kw, kh, stride = stages[i]
        out_ch = stages[i - 1][0] if i > 0 else stages[0][0]
        oh, ow = h * stride, w * stride
        total += 2 * kh * kw * chans * out_ch * oh * ow
        h, w, chans = oh, ow, out_ch
    total += 2 * chans * 1 * h * w
    return total
