"""Command line front end.

fcn train --config cfg.json
    Loads image/target pairs, trains a fresh model, and drops weights.pt,
    training_log.csv and training_meta.json into the output directory.

fcn predict --weights weights.pt --images dir --output-dir dir
    Rebuilds the trained model and writes one <image>.npy map per input
    plus timing.csv with per-image forward times.

The train config is a JSON object; unknown keys are rejected so typos do
not silently fall back to defaults.

Keys: images_dir, targets_dir (required), output_dir (default "."),
encoder (nested list of [filters, kernel_w, kernel_h, stride]), and the
TrainConfig fields epochs, lr, lr_drop_iteration, lr_drop_factor, batch,
seed, target_norm.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from .data import load_image_dir, paired_dataset
from .errors import ConfigError, FcnError
from .model import FcnSpec, build_model
from .train import TrainConfig, predict_and_time, train

_TRAIN_KEYS = ("epochs", "lr", "lr_drop_iteration", "lr_drop_factor",
               "batch", "seed", "target_norm")
_CONFIG_KEYS = ("images_dir", "targets_dir", "output_dir", "encoder") + _TRAIN_KEYS


def _load_config(path):
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("images_dir", "targets_dir"):
        if key not in raw:
            raise ConfigError(f"config needs {key}")
    return raw


def cmd_train(args) -> int:
    raw = _load_config(args.config)
    base = Path(args.config).resolve().parent
    images_dir = (base / raw["images_dir"]).resolve()
    targets_dir = (base / raw["targets_dir"]).resolve()
    out_dir = (base / raw.get("output_dir", ".")).resolve()

    cfg = TrainConfig(**{k: raw[k] for k in _TRAIN_KEYS if k in raw})
    spec = FcnSpec(tuple(tuple(s) for s in raw["encoder"])) if "encoder" in raw else FcnSpec()

    ids, images, targets = paired_dataset(images_dir, targets_dir, cfg.target_norm)
    first = images[0]
    dims = (first.shape[0], first.shape[1], 1 if first.ndim == 2 else first.shape[2])
    model = build_model(spec, dims, seed=cfg.seed)

    out_dir.mkdir(parents=True, exist_ok=True)
    result = train(model, images, targets, cfg, log_path=out_dir / "training_log.csv")

    torch.save({"encoder": [list(s) for s in spec.encoder],
                "input_dims": list(model.input_dims),
                "state": model.state_dict()},
               out_dir / "weights.pt")
    meta = {
        "training_seconds": result.training_seconds,
        "iterations": len(result.losses),
        "initial_loss": result.initial_loss,
        "final_loss": result.final_loss,
        "n_images": len(ids),
        "config": {k: getattr(cfg, k) for k in _TRAIN_KEYS},
        "encoder": [list(s) for s in spec.encoder],
    }
    (out_dir / "training_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"trained on {len(ids)} images for {len(result.losses)} iterations "
          f"in {result.training_seconds:.2f}s, loss {result.initial_loss:.4f} "
          f"-> {result.final_loss:.4f}")
    print(f"wrote {out_dir / 'weights.pt'}")
    return 0


def load_weights(path):
    """Rebuild a model from a weights.pt written by cmd_train."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    for key in ("encoder", "input_dims", "state"):
        if key not in payload:
            raise ConfigError(f"weights file is missing {key!r}")
    spec = FcnSpec(tuple(tuple(s) for s in payload["encoder"]))
    model = build_model(spec, tuple(payload["input_dims"]))
    model.load_state_dict(payload["state"])
    return model


def cmd_predict(args) -> int:
    model = load_weights(args.weights)
    ids, images = load_image_dir(args.images)
    maps, millis = predict_and_time(model, images, image_ids=ids,
                                    out_dir=args.output_dir, warmup=args.warmup)
    mean_ms = float(np.mean(millis))
    print(f"wrote {len(maps)} maps to {args.output_dir} "
          f"(mean forward {mean_ms:.2f} ms)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcn",
                                     description="train and run the small saliency network")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train from a JSON config")
    p_train.add_argument("--config", required=True, help="path to the JSON config")
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="write maps and timings for a directory of images")
    p_pred.add_argument("--weights", required=True, help="weights.pt from fcn train")
    p_pred.add_argument("--images", required=True, help="directory of input PNGs")
    p_pred.add_argument("--output-dir", required=True, help="where maps and timing.csv go")
    p_pred.add_argument("--warmup", type=int, default=3, help="untimed warm-up passes")
    p_pred.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FcnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
