"""Small fully convolutional saliency predictor.

Strided-conv encoder, mirrored transposed-conv decoder, sigmoid head.
Ships with a seeded RMSProp training loop, per-image forward timing, a
static flop counter and a two-command CLI (fcn train / fcn predict).
"""

from .errors import ConfigError, FcnError, ShapeError, TrainingDivergedError
from .model import DEFAULT_ENCODER, FcnModel, FcnSpec, build_model, count_flops, predict_batch
from .train import TrainConfig, TrainResult, predict_and_time, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FcnError",
    "ShapeError",
    "TrainingDivergedError",
    "DEFAULT_ENCODER",
    "FcnModel",
    "FcnSpec",
    "build_model",
    "count_flops",
    "predict_batch",
    "TrainConfig",
    "TrainResult",
    "predict_and_time",
    "train",
    "__version__",
]
