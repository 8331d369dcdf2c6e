"""Command-line front end.

Subcommands: preprocess, density, score, sweep, congruency, eval, synth.
Options can come from a JSON config file (--config); explicit flags win
over the config, which wins over built-in defaults. Unknown config keys
are rejected. Every run exits 0 only if no per-item errors occurred;
failures are also logged machine-readably to errors.json in the output
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, fixmap, imgio
from .errors import SalpresError, ValidationError
from .experiments import SCHEMA_VERSION
from .fixmap import BlurSpec, DensityMap
from .imaging import LINEAR, RasterImage, ResizePolicy, downsample_to_height, gamma_expand, hc_to_lg, resize_bicubic
from .metrics import METRIC_FIELDS, score_pair

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def _parse_size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _common_flags(sub):
    sub.add_argument("--config", help="JSON file with option defaults for this command")
    sub.add_argument("--seed", type=int, help="base random seed (default 0)")
    sub.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    sub.add_argument("--output-dir", help="where outputs land (default .)")
    sub.add_argument("--format", choices=("csv", "json"), help="stdout report format")


_COMMON_DEFAULTS = {
    "seed": 0,
    "jobs": max(os.cpu_count() or 1, 1),
    "output_dir": ".",
    "format": "csv",
    "config": None,
}


def _settings(args, defaults):
    """Merge explicit CLI values over config file values over defaults."""
    merged = dict(_COMMON_DEFAULTS)
    merged.update(defaults)
    given = {k: v for k, v in vars(args).items() if k not in ("command", "func") and v is not None}
    config_path = given.get("config") or merged.get("config")
    if config_path:
        loaded = json.loads(Path(config_path).read_text())
        if not isinstance(loaded, dict):
            raise ValidationError("config must be a JSON object")
        unknown = sorted(set(loaded) - set(merged))
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        merged.update(loaded)
    merged.update(given)
    return merged


def _write_error_log(output_dir, errors):
    path = Path(output_dir) / "errors.json"
    payload = {"schema_version": SCHEMA_VERSION, "errors": errors}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _finish(output_dir, errors):
    if errors:
        _write_error_log(output_dir, errors)
        for e in errors:
            print(f"error: {e['item']}: {e['error']}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# preprocess

def cmd_preprocess(args):
    cfg = _settings(args, {"inputs": None, "target_height": 64, "width": None, "keep_linear": False})
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg["width"] is not None:
        policy = ResizePolicy(cfg["target_height"], "fixed-width", cfg["width"])
    else:
        policy = ResizePolicy(cfg["target_height"])

    paths = []
    for item in cfg["inputs"]:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in _IMAGE_SUFFIXES))
        else:
            paths.append(p)
    if not paths:
        print("warning: no input images found", file=sys.stderr)

    items, errors = [], []
    for path in paths:
        try:
            img = imgio.read_image(path)
            if img.channels == 3:
                lg = hc_to_lg(img, policy)
            else:
                lg = downsample_to_height(
                    RasterImage.from_array(gamma_expand(img.data), encoding=LINEAR), policy
                )
            out_path = out_dir / f"{path.stem}.png"
            imgio.write_png(lg, out_path, keep_linear=cfg["keep_linear"])
            src_bytes = img.width * img.height * img.channels
            items.append(
                {
                    "input": str(path),
                    "output": out_path.name,
                    "source_size": [img.width, img.height, img.channels],
                    "output_size": [lg.width, lg.height, 1],
                    "byte_ratio": (lg.width * lg.height) / src_bytes,
                }
            )
        except SalpresError as exc:
            errors.append({"item": str(path), "error": str(exc)})

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "policy": {
            "target_height": policy.target_height,
            "aspect_mode": policy.aspect_mode,
            "width": policy.width,
        },
        "items": items,
        "errors": errors,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"preprocessed {len(items)} image(s), {len(errors)} error(s) -> {out_dir}")
    return _finish(out_dir, errors)


# ---------------------------------------------------------------------------
# density

def cmd_density(args):
    cfg = _settings(
        args,
        {
            "fixations": None,
            "sizes": None,
            "size": None,
            "stimulus": None,
            "sigma": 30.0,
            "blur_domain": "spatial",
            "per_observer": False,
        },
    )
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    sizes = _load_sizes(cfg)
    sets = fixmap.parse_fixations(cfg["fixations"], sizes)
    if cfg["stimulus"] is not None:
        sets = [fx for fx in sets if fx.stimulus_id == cfg["stimulus"]]
        if not sets:
            raise ValidationError(f"no fixations for stimulus {cfg['stimulus']!r}")
    spec = BlurSpec(sigma=float(cfg["sigma"]), domain=cfg["blur_domain"])

    by_stim = {}
    for fx in sets:
        by_stim.setdefault(fx.stimulus_id, []).append(fx)

    errors = []
    for stim, group in sorted(by_stim.items()):
        units = group if cfg["per_observer"] else [fixmap.aggregate(group)]
        for fx in units:
            name = f"{stim}_{fx.observer_id}" if cfg["per_observer"] else stim
            try:
                dmap = fixmap.blur_density(fixmap.rasterize(fx), spec)
                fixmap.save_density(dmap, out_dir / f"{name}.npy")
                fixmap.density_to_png(dmap, out_dir / f"{name}.png")
            except SalpresError as exc:
                errors.append({"item": name, "error": str(exc)})
    print(f"wrote density maps for {len(by_stim)} stimulus(es) -> {out_dir}")
    return _finish(out_dir, errors)


def _load_sizes(cfg):
    if cfg["sizes"]:
        meta = json.loads(Path(cfg["sizes"]).read_text())
        raw = meta.get("sizes", meta)
        return {k: (int(v[0]), int(v[1])) for k, v in raw.items()}
    if cfg["size"]:
        w, h = _parse_size(cfg["size"])

        class _Everywhere(dict):
            def __contains__(self, key):
                return True

            def __getitem__(self, key):
                return (w, h)

        return _Everywhere()
    raise ValidationError("need --sizes meta.json or --size WxH")


# ---------------------------------------------------------------------------
# score

def _report_lines(report, fmt, leading=()):
    if fmt == "json":
        payload = dict(zip(("stimulus_id",), leading)) if leading else {}
        payload.update(report.to_dict())
        for k, v in payload.items():
            if isinstance(v, float) and not np.isfinite(v):
                payload[k] = None
        return [json.dumps(payload, sort_keys=True)]
    header = ",".join(("stimulus_id",) * bool(leading) + METRIC_FIELDS + ("flags",))
    cells = [str(c) for c in leading]
    cells += [repr(float(getattr(report, m))) for m in METRIC_FIELDS]
    cells.append("|".join(report.flags))
    return [header, ",".join(cells)]


def cmd_score(args):
    cfg = _settings(
        args,
        {
            "pred": None,
            "gt_fixations": None,
            "stimulus": None,
            "sizes": None,
            "size": None,
            "gt_map": None,
            "sigma": 30.0,
            "blur_domain": "spatial",
            "no_negatives": False,
        },
    )
    sizes = _load_sizes(cfg)
    sets = fixmap.parse_fixations(cfg["gt_fixations"], sizes)
    stim = cfg["stimulus"]
    if stim is None:
        ids = sorted({fx.stimulus_id for fx in sets})
        if len(ids) != 1:
            raise ValidationError(f"--stimulus needed, file has {ids}")
        stim = ids[0]
    mine = [fx for fx in sets if fx.stimulus_id == stim]
    if not mine:
        raise ValidationError(f"no fixations for stimulus {stim!r}")
    gt_fix = fixmap.aggregate(mine)
    size = gt_fix.stimulus_size
    spec = BlurSpec(sigma=float(cfg["sigma"]), domain=cfg["blur_domain"])

    pred_path = Path(cfg["pred"])
    if pred_path.suffix == ".npy":
        pred = fixmap.load_density(pred_path)
    else:
        img = imgio.read_image(pred_path)
        data = img.data if img.channels == 1 else img.data.mean(axis=2)
        pred = DensityMap.from_values(data)
    if (pred.width, pred.height) != size:
        resized = resize_bicubic(RasterImage.from_array(pred.values, encoding=LINEAR), *size)
        pred = DensityMap.from_values(resized.data)

    if cfg["gt_map"]:
        gt_map = fixmap.load_density(cfg["gt_map"])
    else:
        gt_map = fixmap.blur_density(fixmap.rasterize(gt_fix), spec)

    negatives = None
    others = [fx for fx in sets if fx.stimulus_id != stim]
    if others and not cfg["no_negatives"]:
        pts = np.concatenate([fixmap.rescale_fixations(fx, size).points for fx in others])
        negatives = fixmap.FixationSet(stim, "negatives", pts, size)

    report = score_pair(pred, gt_fix, gt_map, negatives, seed=cfg["seed"])
    for line in _report_lines(report, cfg["format"], leading=(stim,)):
        print(line)
    return 0


# ---------------------------------------------------------------------------
# sweep / congruency / eval / synth

def cmd_sweep(args):
    cfg = _settings(
        args,
        {
            "dataset": None,
            "sigma_min": 1.0,
            "sigma_max": 100.0,
            "sigma_step": 1.0,
            "blur_domain": "spatial",
            "svg": None,
            "rows_csv": False,
        },
    )
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = experiments.load_dataset(cfg["dataset"])
    sigmas = np.arange(cfg["sigma_min"], cfg["sigma_max"] + cfg["sigma_step"] / 2, cfg["sigma_step"])
    result = experiments.run_sigma_sweep(
        dataset, sigmas, domain=cfg["blur_domain"], seed=cfg["seed"], jobs=cfg["jobs"]
    )
    experiments.write_sweep_csv(result, out_dir / "sweep.csv")
    experiments.write_summary_json(result, out_dir / "summary.json")
    if cfg["rows_csv"]:
        experiments.write_sweep_rows_csv(result, out_dir / "sweep_rows.csv")
    if cfg["svg"]:
        experiments.write_sweep_svg(result, out_dir / cfg["svg"])
    last = {m: result.curves[m]["median"][-1] for m in METRIC_FIELDS}
    print(
        f"sweep over {len(result.sigmas)} sigmas, {len(result.rows)} scored pairs; "
        "final medians: " + ", ".join(f"{m}={last[m]:.4f}" for m in METRIC_FIELDS)
    )
    return _finish(out_dir, [])


def cmd_congruency(args):
    cfg = _settings(args, {"dataset": None, "sigma": 30.0, "blur_domain": "spatial"})
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = experiments.load_dataset(cfg["dataset"])
    result = experiments.run_congruency(
        dataset, sigma=cfg["sigma"], domain=cfg["blur_domain"], seed=cfg["seed"]
    )
    experiments.write_congruency_csv(result, out_dir / "congruency.csv")
    experiments.write_summary_json(result, out_dir / "summary.json")
    for m in METRIC_FIELDS:
        test = result.anova.get(m)
        if test:
            print(
                f"{m}: hc median {result.medians['hc'][m]:.4f}, "
                f"lg median {result.medians['lg'][m]:.4f}, "
                f"F({test.dof[0]},{test.dof[1]})={test.statistic:.4f}, p={test.p_value:.4f}"
            )
    return _finish(out_dir, [])


def cmd_eval(args):
    cfg = _settings(
        args,
        {
            "pred_dir": None,
            "dataset": None,
            "condition": "hc",
            "eval_size": None,
            "sigma": 30.0,
            "blur_domain": "spatial",
            "compare_dir": None,
        },
    )
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = experiments.load_dataset(cfg["dataset"])
    eval_size = _parse_size(cfg["eval_size"]) if cfg["eval_size"] else None
    result = experiments.evaluate_model_outputs(
        cfg["pred_dir"],
        dataset,
        condition=cfg["condition"],
        eval_size=eval_size,
        sigma=cfg["sigma"],
        domain=cfg["blur_domain"],
        compare_dir=cfg["compare_dir"],
    )
    experiments.write_model_eval_csv(result, out_dir / "model_eval.csv")
    experiments.write_summary_json(result, out_dir / "summary.json")
    for m in experiments.EVAL_METRICS:
        print(f"{m}: mean {result.means[m]:.4f} (std {result.stds[m]:.4f})")
    if result.detection_ms_mean is not None:
        print(f"detection: {result.detection_ms_mean:.2f} ms/image")
    if result.comparison:
        for m, test in sorted(result.comparison.items()):
            print(f"paired t ({m}): t={test.statistic:.4f}, p={test.p_value:.4g}")
    return _finish(out_dir, [])


def cmd_synth(args):
    cfg = _settings(
        args,
        {
            "stimuli": 20,
            "observers": 18,
            "fixations": 5,
            "size": "320x180",
            "loci": 1,
            "locus_region": 0.25,
            "observer_sigma": 4.0,
            "point_sigma": 0.0,
            "jitter": 2.0,
            "jitter_mode": "offset",
        },
    )
    out_dir = Path(cfg["output_dir"])
    spec = experiments.SyntheticSpec(
        n_stimuli=int(cfg["stimuli"]),
        n_observers=int(cfg["observers"]),
        fixations_per_observer=int(cfg["fixations"]),
        stimulus_size=_parse_size(cfg["size"]),
        n_loci=int(cfg["loci"]),
        locus_region=float(cfg["locus_region"]),
        observer_sigma=float(cfg["observer_sigma"]),
        point_sigma=float(cfg["point_sigma"]),
        jitter_sigma=float(cfg["jitter"]),
        jitter_mode=cfg["jitter_mode"],
    )
    dataset = experiments.generate_synthetic_dataset(spec, cfg["seed"], out_dir)
    print(
        f"synthesized {len(dataset.stimuli)} stimuli x {len(dataset.observers)} observers -> {out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="salpres",
        description="Benchmark how well downscaled grayscale images preserve visual saliency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="downscale images to low-resolution grayscale")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    p.add_argument("--target-height", type=int, help="output height (default 64)")
    p.add_argument("--width", type=int, help="force output width (fixed-width mode)")
    p.add_argument("--keep-linear", action="store_true", default=None,
                   help="write linear values instead of gamma-compressed")
    _common_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("density", help="rasterize and blur fixations into density maps")
    p.add_argument("--fixations", required=True, help="fixation CSV")
    p.add_argument("--sizes", help="meta.json with per-stimulus sizes")
    p.add_argument("--size", help="single WxH for all stimuli")
    p.add_argument("--stimulus", help="only this stimulus id")
    p.add_argument("--sigma", type=float, help="blur sigma in pixels (default 30)")
    p.add_argument("--blur-domain", choices=("spatial", "fourier"))
    p.add_argument("--per-observer", action="store_true", default=None,
                   help="one map per observer instead of pooled")
    _common_flags(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("score", help="score one prediction map against fixations")
    p.add_argument("--pred", required=True, help="prediction map (.npy or image)")
    p.add_argument("--gt-fixations", required=True, help="ground-truth fixation CSV")
    p.add_argument("--stimulus", help="stimulus id to score")
    p.add_argument("--sizes", help="meta.json with per-stimulus sizes")
    p.add_argument("--size", help="single WxH for all stimuli")
    p.add_argument("--gt-map", help="precomputed ground-truth density (.npy)")
    p.add_argument("--sigma", type=float, help="blur sigma when building the gt map")
    p.add_argument("--blur-domain", choices=("spatial", "fourier"))
    p.add_argument("--no-negatives", action="store_true", default=None,
                   help="skip the shuffled AUC even if other stimuli exist")
    _common_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="score lg vs hc across a range of blur sigmas")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--sigma-max", type=float)
    p.add_argument("--sigma-step", type=float)
    p.add_argument("--blur-domain", choices=("spatial", "fourier"))
    p.add_argument("--svg", help="also write an SVG chart with this file name")
    p.add_argument("--rows-csv", action="store_true", default=None,
                   help="also write every scored pair to sweep_rows.csv")
    _common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("congruency", help="leave-one-out congruency, hc vs lg")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--sigma", type=float, help="blur sigma in pixels (default 30)")
    p.add_argument("--blur-domain", choices=("spatial", "fourier"))
    _common_flags(p)
    p.set_defaults(func=cmd_congruency)

    p = sub.add_parser("eval", help="evaluate saved model prediction maps")
    p.add_argument("--pred-dir", required=True, help="directory of prediction maps")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--condition", choices=experiments.CONDITIONS)
    p.add_argument("--eval-size", help="score at this WxH (default: stimulus size)")
    p.add_argument("--sigma", type=float, help="gt blur sigma (default 30)")
    p.add_argument("--blur-domain", choices=("spatial", "fourier"))
    p.add_argument("--compare-dir", help="second prediction dir for paired t-tests")
    _common_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic paired dataset")
    p.add_argument("--stimuli", type=int)
    p.add_argument("--observers", type=int)
    p.add_argument("--fixations", type=int, help="fixations per observer")
    p.add_argument("--size", help="stimulus WxH (default 320x180)")
    p.add_argument("--loci", type=int, help="salient spots per stimulus")
    p.add_argument("--locus-region", type=float, help="central box fraction for loci")
    p.add_argument("--observer-sigma", type=float, help="per-observer offset sigma")
    p.add_argument("--point-sigma", type=float, help="per-fixation scatter sigma")
    p.add_argument("--jitter", type=float, help="condition jitter sigma (default 2)")
    p.add_argument("--jitter-mode", choices=("offset", "split"))
    _common_flags(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SalpresError as exc:
        out_dir = getattr(args, "output_dir", None) or "."
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            _write_error_log(out_dir, [{"item": args.command, "error": str(exc)}])
        except OSError:
            pass
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
