"""Training loop and timed prediction.

The optimizer is RMSProp on a plain MSE between the sigmoid output and the
normalized target map. One iteration is one optimizer step on one batch; an
epoch walks a seeded shuffle of the whole set, so a run makes
epochs * ceil(n_images / batch) iterations in total. Iterations are counted
from 0 and the learning rate is multiplied by lr_drop_factor from iteration
lr_drop_iteration onward (with the defaults: 0.05 until 2000 steps are done,
0.005 from then on).

Everything is pinned to one torch thread so the same seed reproduces the
same loss curve bit for bit on the same machine.
"""

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import ConfigError, ShapeError, TrainingDivergedError
from .model import FcnModel, to_input_tensor

LOG_HEADER = ("iteration", "epoch", "lr", "loss")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for train().

    The defaults are the full-scale recipe (100 epochs, lr 0.05 dropping
    tenfold after 2000 iterations, batches of 8). Small experiments should
    override epochs and batch rather than the schedule.
    """

    epochs: int = 100
    lr: float = 0.05
    lr_drop_iteration: int = 2000
    lr_drop_factor: float = 0.1
    batch: int = 8
    seed: int = 0
    target_norm: str = "max"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not (self.lr > 0):
            raise ConfigError("lr must be positive")
        if self.lr_drop_iteration < 0:
            raise ConfigError("lr_drop_iteration must be >= 0")
        if not (self.lr_drop_factor > 0):
            raise ConfigError("lr_drop_factor must be positive")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.target_norm not in ("max", "sum"):
            raise ConfigError("target_norm must be 'max' or 'sum'")

    def lr_at(self, iteration: int) -> float:
        return self.lr * self.lr_drop_factor if iteration >= self.lr_drop_iteration else self.lr


@dataclass(frozen=True)
class TrainResult:
    """What train() hands back.

    losses[i] is the batch MSE at the weights *before* step i was applied,
    so losses[0] is the untrained loss. training_seconds covers the loop
    only, not data loading.
    """

    training_seconds: float
    losses: tuple
    lrs: tuple

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _stack_inputs(images, model: FcnModel) -> torch.Tensor:
    if len(images) == 0:
        raise ConfigError("need at least one training image")
    return torch.cat([to_input_tensor(im, model.input_dims) for im in images], dim=0)


def _stack_targets(targets, model: FcnModel) -> torch.Tensor:
    h, w, _ = model.input_dims
    rows = []
    for i, t in enumerate(targets):
        arr = np.asarray(t, dtype=np.float32)
        if arr.ndim != 2 or arr.shape != (h, w):
            raise ShapeError(
                f"target {i} has shape {arr.shape}, model wants ({h}, {w})")
        rows.append(torch.from_numpy(np.ascontiguousarray(arr))[None, None])
    return torch.cat(rows, dim=0)


def write_training_log(path, rows):
    """rows: iterable of (iteration, epoch, lr, loss)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_HEADER)
        for iteration, epoch, lr, loss in rows:
            writer.writerow([iteration, epoch, repr(float(lr)), repr(float(loss))])


def train(model: FcnModel, images, targets, cfg: TrainConfig, log_path=None) -> TrainResult:
    """Fit the model in place.

    Parameters
    ----------
    model : FcnModel
    images : sequence of ndarray matching the model dims
    targets : sequence of 2-d ndarray, already normalized to the loss scale
    cfg : TrainConfig
    log_path : optional path for a per-iteration csv
        Columns iteration,epoch,lr,loss.

    Raises
    ------
    TrainingDivergedError
        As soon as a batch loss stops being finite. The message carries the
        iteration, epoch, lr and the last finite loss for postmortems.
    """
    xs = _stack_inputs(images, model)
    ys = _stack_targets(targets, model)
    if xs.shape[0] != ys.shape[0]:
        raise ShapeError(f"{xs.shape[0]} images but {ys.shape[0]} targets")

    torch.set_num_threads(1)
    gen = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.RMSprop(model.parameters(), lr=cfg.lr)
    n = xs.shape[0]
    rows = []
    iteration = 0
    model.train()
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = torch.randperm(n, generator=gen)
        for lo in range(0, n, cfg.batch):
            idx = order[lo:lo + cfg.batch]
            lr = cfg.lr_at(iteration)
            for group in opt.param_groups:
                group["lr"] = lr
            opt.zero_grad()
            out = model(xs[idx])
            loss = torch.nn.functional.mse_loss(out, ys[idx])
            value = float(loss.detach())
            if not math.isfinite(value):
                last = rows[-1][3] if rows else None
                raise TrainingDivergedError(
                    f"loss became {value} at iteration {iteration} "
                    f"(epoch {epoch}, lr {lr:g}, last finite loss {last})")
            loss.backward()
            opt.step()
            rows.append((iteration, epoch, lr, value))
            iteration += 1
    seconds = time.perf_counter() - start

    if log_path is not None:
        write_training_log(log_path, rows)
    return TrainResult(training_seconds=seconds,
                       losses=tuple(r[3] for r in rows),
                       lrs=tuple(r[2] for r in rows))


def predict_and_time(model: FcnModel, images, image_ids=None, out_dir=None, warmup=3):
    """Forward images one at a time, timing each forward pass.

    A few warm-up passes run first (untimed) so lazy kernel setup does not
    land in the first measurement. Timings cover the forward only, never
    file I/O.

    Parameters
    ----------
    model : FcnModel
    images : sequence of ndarray matching the model dims
    image_ids : optional sequence of str
        Defaults to img001, img002, ...
    out_dir : optional path
        When given, writes <id>.npy (2-d float64 map) per image plus a
        timing.csv with header image_id,millis.
    warmup : int

    Returns
    -------
    maps : list of 2-d float64 ndarray in (0, 1)
    millis : list of float
    """
    xs = [to_input_tensor(im, model.input_dims) for im in images]
    if image_ids is None:
        image_ids = [f"img{i + 1:03d}" for i in range(len(xs))]
    image_ids = [str(s) for s in image_ids]
    if len(image_ids) != len(xs):
        raise ConfigError(f"{len(xs)} images but {len(image_ids)} ids")
    if len(set(image_ids)) != len(image_ids):
        raise ConfigError("image ids must be unique")

    torch.set_num_threads(1)
    was_training = model.training
    model.eval()
    maps, millis = [], []
    with torch.no_grad():
        for x in xs[:min(int(warmup), len(xs))]:
            model(x)
        for x in xs:
            t0 = time.perf_counter()
            y = model(x)
            dt = (time.perf_counter() - t0) * 1000.0
            maps.append(y[0, 0].numpy().astype(np.float64))
            millis.append(dt)
    if was_training:
        model.train()

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, arr in zip(image_ids, maps):
            np.save(out / f"{name}.npy", arr)
        with open(out / "timing.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_id", "millis"])
            for name, ms in zip(image_ids, millis):
                writer.writerow([name, repr(float(ms))])
    return maps, millis
