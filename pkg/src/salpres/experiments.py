"""Experiment runners: synthetic datasets, sigma sweeps, congruency, model eval.

A dataset is a paired collection of fixation sets: two viewing conditions
("hc" for the full-color originals, "lg" for the downscaled grayscale
variant shown upscaled), each holding one FixationSet per (stimulus,
observer). Runners score the conditions against each other and aggregate
with medians and quartiles. All outputs are deterministic for a fixed
seed: stable iteration order, seeded sub-streams, no timestamps.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ValidationError
from .fixmap import (
    BlurSpec,
    DensityMap,
    FixationSet,
    aggregate,
    blur_density,
    parse_fixations,
    rasterize,
    rescale_fixations,
    write_fixations,
)
from .imaging import SRGB_GAMMA, RasterImage, ResizePolicy, hc_to_lg, resize_bicubic
from .imgio import read_image, write_png
from .metrics import METRIC_FIELDS, MetricReport, score_pair
from .stats import TestResult, median, one_way_anova, paired_t_test

SCHEMA_VERSION = 1

HC = "hc"
LG = "lg"
CONDITIONS = (HC, LG)

# Metrics scored when evaluating model prediction maps (the shuffled AUC
# and divergence need per-observer structure the model comparison lacks).
EVAL_METRICS = ("nss", "auc_judd", "cc", "sim")


# ---------------------------------------------------------------------------
# dataset container and loading

@dataclass(frozen=True)
class PairedDataset:
    """Fixations for both viewing conditions over a stimulus/observer grid."""

    stimuli: tuple[str, ...]
    observers: tuple[str, ...]
    sizes: dict[str, tuple[int, int]]
    fixations: dict[tuple[str, str, str], FixationSet]  # (condition, stimulus, observer)

    def get(self, condition, stimulus, observer) -> FixationSet:
        return self.fixations[(condition, stimulus, observer)]

    def validate_complete(self):
        missing = [
            (c, s, o)
            for c in CONDITIONS
            for s in self.stimuli
            for o in self.observers
            if (c, s, o) not in self.fixations
        ]
        if missing:
            raise ValidationError(f"dataset is missing pairs: {missing[:5]} ...")


def _index_sets(sets, condition):
    out = {}
    for fx in sets:
        key = (condition, fx.stimulus_id, fx.observer_id)
        if key in out:
            raise ValidationError(f"duplicate fixation set for {key}")
        out[key] = fx
    return out


def load_dataset(root) -> PairedDataset:
    """Load a dataset directory: meta.json plus per-condition fixation CSVs."""
    root = Path(root)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise ParseError(f"{meta_path} not found")
    meta = json.loads(meta_path.read_text())
    sizes = {k: (int(v[0]), int(v[1])) for k, v in meta["sizes"].items()}
    stimuli = tuple(meta["stimuli"])
    observers = tuple(meta["observers"])
    fixations = {}
    for cond in CONDITIONS:
        sets = parse_fixations(root / f"fixations_{cond}.csv", sizes)
        fixations.update(_index_sets(sets, cond))
    ds = PairedDataset(stimuli, observers, sizes, fixations)
    ds.validate_complete()
    return ds


def pooled_negatives(dataset: PairedDataset, condition, stimulus) -> FixationSet:
    """All fixations from the other stimuli, mapped onto this stimulus' raster."""
    size = dataset.sizes[stimulus]
    chunks = []
    for other in dataset.stimuli:
        if other == stimulus:
            continue
        for obs in dataset.observers:
            fx = dataset.get(condition, other, obs)
            if len(fx):
                chunks.append(rescale_fixations(fx, size).points)
    if not chunks:
        raise ValidationError("shuffled-AUC negatives need at least two stimuli")
    return FixationSet(stimulus, "negatives", np.concatenate(chunks), size)


# ---------------------------------------------------------------------------
# synthetic dataset generation

@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry and noise parameters for generated fixation data.

    Each stimulus gets n_loci salient spots inside a central box covering
    locus_region of each dimension. An observer sees each spot through a
    personal offset (observer_sigma) and per-fixation scatter
    (point_sigma). jitter_sigma displaces the two conditions relative to
    each other: mode "offset" leaves hc at the base point and jitters lg
    (matched-pairs geometry), mode "split" jitters both independently
    around the shared base (exchangeable null geometry).
    """

    n_stimuli: int = 20
    n_observers: int = 18
    fixations_per_observer: int = 5
    stimulus_size: tuple[int, int] = (320, 180)
    n_loci: int = 1
    locus_region: float = 0.25
    observer_sigma: float = 4.0
    point_sigma: float = 0.0
    jitter_sigma: float = 2.0
    jitter_mode: str = "offset"

    def __post_init__(self):
        if self.n_stimuli < 1 or self.n_observers < 1 or self.fixations_per_observer < 1:
            raise DomainError("synthetic counts must be positive")
        if self.jitter_mode not in ("offset", "split"):
            raise DomainError(f"unknown jitter_mode {self.jitter_mode!r}")
        if not 0.0 < self.locus_region <= 1.0:
            raise DomainError("locus_region must be in (0, 1]")
        if min(self.jitter_sigma, self.observer_sigma, self.point_sigma) < 0:
            raise DomainError("sigmas must be nonnegative")


def synthesize_fixations(spec: SyntheticSpec, seed: int) -> tuple[PairedDataset, dict]:
    """Draw the paired fixation data (no files touched).

    Returns the dataset and the per-stimulus loci (for image rendering).
    The fixation stream and the image stream are separate children of the
    seed, so fixations are identical whether or not images get rendered.
    """
    fix_ss, _ = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(fix_ss)
    w, h = spec.stimulus_size
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    half_w = spec.locus_region * w / 2.0
    half_h = spec.locus_region * h / 2.0

    stimuli = tuple(f"stim{i + 1:03d}" for i in range(spec.n_stimuli))
    observers = tuple(f"obs{i + 1:02d}" for i in range(spec.n_observers))
    sizes = {s: (w, h) for s in stimuli}
    loci_by_stim = {}
    points = {(c, s, o): [] for c in CONDITIONS for s in stimuli for o in observers}

    for stim in stimuli:
        loci = np.column_stack(
            [
                rng.uniform(cx - half_w, cx + half_w, spec.n_loci),
                rng.uniform(cy - half_h, cy + half_h, spec.n_loci),
            ]
        )
        loci_by_stim[stim] = loci
        for obs in observers:
            offset = rng.normal(0.0, spec.observer_sigma, 2)
            for k in range(spec.fixations_per_observer):
                # Round-robin over loci so every spot is visited.
                base = loci[k % spec.n_loci] + offset
                if spec.point_sigma > 0:
                    base = base + rng.normal(0.0, spec.point_sigma, 2)
                if spec.jitter_mode == "offset":
                    hc_pt = base
                    lg_pt = base + rng.normal(0.0, spec.jitter_sigma, 2)
                else:
                    hc_pt = base + rng.normal(0.0, spec.jitter_sigma, 2)
                    lg_pt = base + rng.normal(0.0, spec.jitter_sigma, 2)
                points[(HC, stim, obs)].append(np.clip(hc_pt, 0, [w - 1, h - 1]))
                points[(LG, stim, obs)].append(np.clip(lg_pt, 0, [w - 1, h - 1]))

    fixations = {
        key: FixationSet(key[1], key[2], np.array(pts), (w, h))
        for key, pts in points.items()
    }
    dataset = PairedDataset(stimuli, observers, sizes, fixations)
    return dataset, loci_by_stim


def _render_stimulus(rng, size, loci):
    """A smooth color background with a bright blob at each salient locus."""
    w, h = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dark = rng.uniform(0.15, 0.40, 3)
    light = rng.uniform(0.55, 0.80, 3)
    ramp = (yy / max(h - 1, 1))[..., None]
    img = dark + (light - dark) * ramp
    radius = 0.08 * min(w, h)
    for lx, ly in loci:
        color = rng.uniform(0.6, 1.0, 3)
        bump = np.exp(-((xx - lx) ** 2 + (yy - ly) ** 2) / (2.0 * radius * radius))
        img = img + bump[..., None] * (color - img) * 0.9
    return np.clip(img, 0.0, 1.0)


def generate_synthetic_dataset(spec: SyntheticSpec, seed: int, out_dir) -> PairedDataset:
    """Synthesize a dataset and write it out as a loadable directory.

    Layout: fixations_hc.csv, fixations_lg.csv, meta.json, stimuli_hc/
    (color PNGs with the salient blobs), stimuli_lg/ (their downscaled
    grayscale counterparts). Byte-identical for identical (spec, seed).
    """
    dataset, loci = synthesize_fixations(spec, seed)
    _, img_ss = np.random.SeedSequence(seed).spawn(2)
    img_rng = np.random.default_rng(img_ss)

    out = Path(out_dir)
    (out / "stimuli_hc").mkdir(parents=True, exist_ok=True)
    (out / "stimuli_lg").mkdir(exist_ok=True)
    for stim in dataset.stimuli:
        hc_img = RasterImage.from_array(
            _render_stimulus(img_rng, spec.stimulus_size, loci[stim]), encoding=SRGB_GAMMA
        )
        write_png(hc_img, out / "stimuli_hc" / f"{stim}.png")
        write_png(hc_to_lg(hc_img), out / "stimuli_lg" / f"{stim}.png")

    for cond in CONDITIONS:
        sets = [
            dataset.get(cond, s, o) for s in dataset.stimuli for o in dataset.observers
        ]
        write_fixations(sets, out / f"fixations_{cond}.csv")

    meta = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "stimuli": list(dataset.stimuli),
        "observers": list(dataset.observers),
        "sizes": {s: list(dataset.sizes[s]) for s in dataset.stimuli},
        "synthetic_spec": asdict(spec),
    }
    (out / "meta.json").write_text(_json_dumps(meta) + "\n")
    return dataset


# ---------------------------------------------------------------------------
# sigma sweep

@dataclass(frozen=True)
class SweepResult:
    sigmas: tuple[float, ...]
    domain: str
    seed: int
    curves: dict[str, dict[str, tuple[float, ...]]]  # metric -> median/p25/p75
    rows: tuple  # (sigma, stimulus, observer, MetricReport)

    def to_summary_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "sigma_sweep",
            "sigmas": list(self.sigmas),
            "blur_domain": self.domain,
            "seed": self.seed,
            "n_pairs": len(self.rows) // max(len(self.sigmas), 1),
            "curves": {
                m: {k: [_json_float(v) for v in vs] for k, vs in c.items()}
                for m, c in self.curves.items()
            },
        }


def _pair_seed(seed, *parts):
    """Stable per-item seed for the shuffled-AUC sampler.

    Keyed by item identity (names and sigma value, never positions), so
    reordering observers or stimuli cannot change any score.
    """
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    entropy = (int(seed), int.from_bytes(key, "big"))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _score_stimulus_over_sigmas(dataset, stim_index, sigmas, domain, seed):
    """All (sigma, observer) scores for one stimulus; lg predicts hc."""
    stim = dataset.stimuli[stim_index]
    negatives = pooled_negatives(dataset, HC, stim)
    rows = []
    for obs in dataset.observers:
        fix_hc = dataset.get(HC, stim, obs)
        fix_lg = dataset.get(LG, stim, obs)
        raster_hc = rasterize(fix_hc)
        raster_lg = rasterize(fix_lg)
        for sigma in sigmas:
            spec = BlurSpec(sigma=float(sigma), domain=domain)
            pred = blur_density(raster_lg, spec)
            gt_map = blur_density(raster_hc, spec)
            report = score_pair(
                pred, fix_hc, gt_map, negatives,
                seed=_pair_seed(seed, stim, obs, float(sigma)),
            )
            rows.append((float(sigma), stim, obs, report))
    return rows


def _aggregate_curves(rows, sigmas):
    curves = {}
    by_sigma = {float(s): i for i, s in enumerate(sigmas)}
    values = {m: [[] for _ in sigmas] for m in METRIC_FIELDS}
    for sigma, _stim, _obs, report in rows:
        idx = by_sigma[sigma]
        for m in METRIC_FIELDS:
            v = getattr(report, m)
            if math.isfinite(v):
                values[m][idx].append(v)
    for m in METRIC_FIELDS:
        med, p25, p75 = [], [], []
        for bucket in values[m]:
            if bucket:
                med.append(median(bucket))
                lo, hi = np.percentile(bucket, (25.0, 75.0))
                p25.append(float(lo))
                p75.append(float(hi))
            else:
                med.append(float("nan"))
                p25.append(float("nan"))
                p75.append(float("nan"))
        curves[m] = {"median": tuple(med), "p25": tuple(p25), "p75": tuple(p75)}
    return curves


def run_sigma_sweep(
    dataset: PairedDataset,
    sigmas=None,
    *,
    domain: str = "spatial",
    seed: int = 0,
    jobs: int = 1,
) -> SweepResult:
    """Score lg-predicts-hc for every (stimulus, observer) across sigmas.

    Aggregation is per sigma and metric over all pairs: median plus the
    25th/75th percentiles (linear interpolation). Non-finite scores are
    left out of the aggregates but kept in the row log. With jobs > 1,
    stimuli are scored in parallel; row order does not depend on jobs.
    """
    dataset.validate_complete()
    sigmas = tuple(float(s) for s in (sigmas if sigmas is not None else range(1, 101)))
    if not sigmas:
        raise ValidationError("sweep needs at least one sigma")
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValidationError("sigmas must be strictly increasing")
    indices = range(len(dataset.stimuli))
    if jobs > 1:
        args = [(dataset, i, sigmas, domain, seed) for i in indices]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_worker, args))
    else:
        chunks = [
            _score_stimulus_over_sigmas(dataset, i, sigmas, domain, seed) for i in indices
        ]
    rows = tuple(row for chunk in chunks for row in chunk)
    return SweepResult(sigmas, domain, seed, _aggregate_curves(rows, sigmas), rows)


def _sweep_worker(args):
    return _score_stimulus_over_sigmas(*args)


# ---------------------------------------------------------------------------
# leave-one-out congruency

@dataclass(frozen=True)
class CongruencyResult:
    sigma: float
    domain: str
    seed: int
    rows: tuple  # (condition, stimulus, observer, MetricReport)
    medians: dict[str, dict[str, float]]  # condition -> metric -> median
    anova: dict[str, TestResult]  # metric -> hc-vs-lg test

    def to_summary_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "congruency",
            "sigma": self.sigma,
            "blur_domain": self.domain,
            "seed": self.seed,
            "medians": {
                c: {m: _json_float(v) for m, v in ms.items()}
                for c, ms in self.medians.items()
            },
            "anova": {m: t.to_dict() for m, t in self.anova.items()},
        }


def leave_one_out_prediction(
    dataset: PairedDataset, condition, stimulus, observer, spec: BlurSpec
) -> DensityMap:
    """Density of everyone else's fixations on this stimulus."""
    others = [
        dataset.get(condition, stimulus, o) for o in dataset.observers if o != observer
    ]
    return blur_density(rasterize(aggregate(others)), spec)


def run_congruency(
    dataset: PairedDataset,
    sigma: float = 30.0,
    *,
    domain: str = "spatial",
    seed: int = 0,
) -> CongruencyResult:
    """Leave-one-out inter-observer congruency, compared across conditions.

    For each (condition, stimulus, observer), the held-out observer's
    fixations are scored against the pooled map of the remaining
    observers. Per metric, the hc and lg score populations then go into a
    one-way ANOVA; congruent conditions should not separate.
    """
    dataset.validate_complete()
    if len(dataset.observers) < 3:
        raise ValidationError("congruency needs at least three observers")
    spec = BlurSpec(sigma=sigma, domain=domain)
    rows = []
    for cond in CONDITIONS:
        for stim in dataset.stimuli:
            negatives = pooled_negatives(dataset, cond, stim) if len(dataset.stimuli) > 1 else None
            for obs in dataset.observers:
                pred = leave_one_out_prediction(dataset, cond, stim, obs, spec)
                gt_fix = dataset.get(cond, stim, obs)
                gt_map = blur_density(rasterize(gt_fix), spec)
                report = score_pair(
                    pred, gt_fix, gt_map, negatives,
                    seed=_pair_seed(seed, cond, stim, obs),
                )
                rows.append((cond, stim, obs, report))

    by_cond = {c: {m: [] for m in METRIC_FIELDS} for c in CONDITIONS}
    for cond, _stim, _obs, report in rows:
        for m in METRIC_FIELDS:
            v = getattr(report, m)
            if math.isfinite(v):
                by_cond[cond][m].append(v)
    medians = {
        c: {m: (median(vs) if vs else float("nan")) for m, vs in ms.items()}
        for c, ms in by_cond.items()
    }
    anova = {}
    for m in METRIC_FIELDS:
        groups = [by_cond[HC][m], by_cond[LG][m]]
        if all(len(g) >= 2 for g in groups):
            anova[m] = one_way_anova(groups)
    return CongruencyResult(float(sigma), domain, seed, tuple(rows), medians, anova)


# ---------------------------------------------------------------------------
# model output evaluation

@dataclass(frozen=True)
class ModelEvalResult:
    eval_size: tuple[int, int]
    sigma: float
    per_image: dict[str, MetricReport]
    means: dict[str, float]
    stds: dict[str, float]
    detection_ms: dict[str, float]  # per image
    detection_ms_mean: float | None
    detection_ms_std: float | None
    training_seconds: float | None
    comparison: dict[str, TestResult] | None  # vs the compare_dir run

    def to_summary_dict(self):
        out = {
            "schema_version": SCHEMA_VERSION,
            "kind": "model_eval",
            "eval_size": list(self.eval_size),
            "sigma": self.sigma,
            "metrics": {
                m: {"mean": _json_float(self.means[m]), "std": _json_float(self.stds[m])}
                for m in EVAL_METRICS
            },
            "detection_ms_mean": _json_float(self.detection_ms_mean),
            "detection_ms_std": _json_float(self.detection_ms_std),
            "training_seconds": _json_float(self.training_seconds),
        }
        if self.comparison is not None:
            out["comparison"] = {k: t.to_dict() for k, t in self.comparison.items()}
        return out


def _has_prediction(pred_dir: Path, stim: str):
    return (pred_dir / f"{stim}.npy").exists() or (pred_dir / f"{stim}.png").exists()


def _load_prediction(pred_dir: Path, stim: str):
    npy = pred_dir / f"{stim}.npy"
    if npy.exists():
        arr = np.asarray(np.load(npy, allow_pickle=False), dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"{npy}: prediction must be a 2-d array")
        if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
            raise ValidationError(f"{npy}: prediction values must lie in [0, 1]")
        return arr
    img = read_image(pred_dir / f"{stim}.png")
    return img.data if img.channels == 1 else img.data.mean(axis=2)


def _read_timing(pred_dir: Path):
    path = pred_dir / "timing.csv"
    if not path.exists():
        return {}
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line == "image_id,millis":
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ParseError("timing.csv rows are image_id,millis", line=lineno)
        try:
            ms = float(cells[1])
        except ValueError:
            raise ParseError(f"bad millis {cells[1]!r}", line=lineno) from None
        if ms <= 0:
            raise ValidationError(f"timing.csv line {lineno}: millis must be positive")
        out[cells[0]] = ms
    return out


def _read_training_seconds(pred_dir: Path):
    meta_path = pred_dir / "training_meta.json"
    if not meta_path.exists():
        return None
    meta = json.loads(meta_path.read_text())
    seconds = float(meta["training_seconds"])
    if seconds <= 0:
        raise ValidationError("training_seconds must be positive")
    return seconds


def evaluate_model_outputs(
    pred_dir,
    dataset: PairedDataset,
    *,
    condition: str = HC,
    eval_size: tuple[int, int] | None = None,
    sigma: float = 30.0,
    domain: str = "spatial",
    compare_dir=None,
) -> ModelEvalResult:
    """Score saved model prediction maps against pooled human fixations.

    Predictions live in pred_dir as <stimulus_id>.npy (values in [0, 1])
    or grayscale PNG; each is bicubically resampled to eval_size (default:
    the stimulus raster) before scoring nss, auc_judd, cc and sim against
    the pooled fixations and their blurred density. timing.csv and
    training_meta.json in pred_dir feed the runtime fields when present.
    With compare_dir, the same evaluation runs there and per-metric paired
    t-tests (plus one on per-image detection times) land in .comparison.
    """
    pred_dir = Path(pred_dir)
    missing = [s for s in dataset.stimuli if not _has_prediction(pred_dir, s)]
    if missing:
        raise ValidationError(f"missing predictions in {pred_dir}: {missing}")

    per_image = {}
    for stim in dataset.stimuli:
        pooled = aggregate([dataset.get(condition, stim, o) for o in dataset.observers])
        size = eval_size or dataset.sizes[stim]
        if tuple(pooled.stimulus_size) != tuple(size):
            pooled = rescale_fixations(pooled, size)
        spec = BlurSpec(sigma=sigma, domain=domain)
        gt_map = blur_density(rasterize(pooled), spec)
        arr = _load_prediction(pred_dir, stim)
        img = RasterImage.from_array(arr, encoding="linear")
        if (img.width, img.height) != tuple(size):
            img = resize_bicubic(img, size[0], size[1])
        pred = DensityMap.from_values(img.data)
        report = score_pair(pred, pooled, gt_map)
        # Model comparisons use the four map-vs-fixation accuracy metrics.
        per_image[stim] = MetricReport(
            nss=report.nss,
            kl=float("nan"),
            auc_judd=report.auc_judd,
            auc_shuffled=float("nan"),
            cc=report.cc,
            sim=report.sim,
            flags=tuple(f for f in report.flags if not f.startswith("auc_shuffled"))
            + ("kl:not-computed", "auc_shuffled:not-computed"),
        )

    means, stds = {}, {}
    for m in EVAL_METRICS:
        vals = [getattr(r, m) for r in per_image.values() if math.isfinite(getattr(r, m))]
        means[m] = float(np.mean(vals)) if vals else float("nan")
        stds[m] = float(np.std(vals, ddof=1)) if len(vals) > 1 else float("nan")

    timing = _read_timing(pred_dir)
    ms_vals = [timing[s] for s in dataset.stimuli if s in timing]
    result = ModelEvalResult(
        eval_size=tuple(eval_size) if eval_size else dataset.sizes[dataset.stimuli[0]],
        sigma=float(sigma),
        per_image=per_image,
        means=means,
        stds=stds,
        detection_ms=timing,
        detection_ms_mean=float(np.mean(ms_vals)) if ms_vals else None,
        detection_ms_std=float(np.std(ms_vals, ddof=1)) if len(ms_vals) > 1 else None,
        training_seconds=_read_training_seconds(pred_dir),
        comparison=None,
    )
    if compare_dir is None:
        return result

    other = evaluate_model_outputs(
        compare_dir,
        dataset,
        condition=condition,
        eval_size=eval_size,
        sigma=sigma,
        domain=domain,
    )
    tests = {}
    for m in EVAL_METRICS:
        mine = [getattr(result.per_image[s], m) for s in dataset.stimuli]
        theirs = [getattr(other.per_image[s], m) for s in dataset.stimuli]
        pairs = [(x, y) for x, y in zip(mine, theirs) if math.isfinite(x) and math.isfinite(y)]
        if len(pairs) >= 2:
            tests[m] = paired_t_test([p[0] for p in pairs], [p[1] for p in pairs])
    shared_ms = [s for s in dataset.stimuli if s in result.detection_ms and s in other.detection_ms]
    if len(shared_ms) >= 2:
        tests["detection_ms"] = paired_t_test(
            [result.detection_ms[s] for s in shared_ms],
            [other.detection_ms[s] for s in shared_ms],
        )
    return replace(result, comparison=tests)


# ---------------------------------------------------------------------------
# serialization

def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _json_dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def write_summary_json(result, path):
    """summary.json for any runner result (sorted keys, no NaN literals)."""
    Path(path).write_text(_json_dumps(result.to_summary_dict()) + "\n")


def _fmt(v):
    return repr(float(v))


def write_sweep_csv(result: SweepResult, path):
    """Long-format curves: one row per (sigma, metric)."""
    lines = [f"# schema_version={SCHEMA_VERSION}", "sigma,metric,median,p25,p75"]
    for m in METRIC_FIELDS:
        curve = result.curves[m]
        for i, sigma in enumerate(result.sigmas):
            lines.append(
                f"{_fmt(sigma)},{m},{_fmt(curve['median'][i])},"
                f"{_fmt(curve['p25'][i])},{_fmt(curve['p75'][i])}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_rows_csv(rows, path, leading=("condition", "stimulus_id", "observer_id")):
    """Per-pair metric rows; the metric columns keep their canonical order."""
    header = ",".join(leading + METRIC_FIELDS + ("flags",))
    lines = [f"# schema_version={SCHEMA_VERSION}", header]
    for row in rows:
        *keys, report = row
        cells = [str(k) for k in keys]
        cells += [_fmt(getattr(report, m)) for m in METRIC_FIELDS]
        cells.append("|".join(report.flags))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_congruency_csv(result: CongruencyResult, path):
    write_rows_csv(result.rows, path)


def write_sweep_rows_csv(result: SweepResult, path):
    write_rows_csv(result.rows, path, leading=("sigma", "stimulus_id", "observer_id"))


def write_model_eval_csv(result: ModelEvalResult, path):
    rows = [(stim, report) for stim, report in result.per_image.items()]
    write_rows_csv(rows, path, leading=("stimulus_id",))


def write_sweep_svg(result: SweepResult, path):
    """Small-multiples chart of the sweep curves (median line, IQR band)."""
    panel_w, panel_h, gap, margin = 360, 120, 18, 40
    width = margin * 2 + panel_w
    height = margin + len(METRIC_FIELDS) * (panel_h + gap)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    ]
    xs = np.asarray(result.sigmas)
    x_lo, x_hi = xs.min(), xs.max()
    for pi, m in enumerate(METRIC_FIELDS):
        top = margin // 2 + pi * (panel_h + gap)
        curve = result.curves[m]
        med = np.asarray(curve["median"])
        p25 = np.asarray(curve["p25"])
        p75 = np.asarray(curve["p75"])
        ok = np.isfinite(med)
        parts.append(f'<text x="{margin}" y="{top - 4}">{m}</text>')
        parts.append(
            f'<rect x="{margin}" y="{top}" width="{panel_w}" height="{panel_h}" '
            'fill="none" stroke="#999"/>'
        )
        if not ok.any():
            continue
        lo = float(np.nanmin(p25)) if np.isfinite(p25).any() else float(np.nanmin(med))
        hi = float(np.nanmax(p75)) if np.isfinite(p75).any() else float(np.nanmax(med))
        if hi <= lo:
            hi = lo + 1.0

        def px(x):
            return margin + (x - x_lo) / max(x_hi - x_lo, 1e-9) * panel_w

        def py(y):
            return top + panel_h - (y - lo) / (hi - lo) * panel_h

        band_ok = ok & np.isfinite(p25) & np.isfinite(p75)
        if band_ok.any():
            upper = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs[band_ok], p75[band_ok])]
            lower = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs[band_ok][::-1], p25[band_ok][::-1])]
            parts.append(
                f'<polygon points="{" ".join(upper + lower)}" fill="#88aadd" '
                'fill-opacity="0.35" stroke="none"/>'
            )
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs[ok], med[ok]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#224488" stroke-width="1.5"/>')
        parts.append(f'<text x="{margin - 36}" y="{top + 10}">{hi:.3g}</text>')
        parts.append(f'<text x="{margin - 36}" y="{top + panel_h}">{lo:.3g}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
