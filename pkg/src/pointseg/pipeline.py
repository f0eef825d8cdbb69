"""Experiment orchestration: points -> modalities -> pseudo-labels -> classifier -> metrics.

Input sources are named by short tokens::

    J, B, M      flattened joint / bone / motion skeleton data
    JF, BF, MF   per-frame features of the joint / bone / motion streams

A generator's source is one token or a ``+``-joined list (``"J+JF"``), in
which case each part is z-normalized per dimension and the parts are
concatenated. The classifier input is a plain concatenation of tokens.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .annotation import PointStrategy, simulate_points
from .data import UNLABELED, derive_bone, derive_motion, flatten, fuse_many
from .errors import ConfigurationError, LoadError, PointsegError, StageError, ValidationError
from .metrics import DEFAULT_THRESHOLDS, MetricReport, evaluate_dataset
from .pseudo_label import (
    GeneratorConfig,
    Prototypes,
    compute_prototypes,
    generate_energy_labels,
    generate_kmedoids_labels,
    generate_prototype_labels,
    integrate,
)
from .segmenter import fit, predict, smooth

log = logging.getLogger(__name__)

GENERATORS = ("prototype", "kmedoids", "energy")
DEFAULT_ROUTING = {"prototype": "J+JF", "kmedoids": "B+BF", "energy": "M+MF"}
RAW_TOKENS = {"J": "joint", "B": "bone", "M": "motion"}
FEATURE_TOKENS = {"JF": "joint", "BF": "bone", "MF": "motion"}


def parse_source(source: str) -> tuple[str, ...]:
    tokens = tuple(t.strip() for t in source.split("+"))
    for t in tokens:
        if t not in RAW_TOKENS and t not in FEATURE_TOKENS:
            raise ConfigurationError(f"unknown input token {t!r} in source {source!r}")
    if len(set(tokens)) != len(tokens):
        raise ConfigurationError(f"repeated token in source {source!r}")
    return tokens


@dataclass
class PipelineConfig:
    routing: dict = field(default_factory=lambda: dict(DEFAULT_ROUTING))
    generators: tuple = GENERATORS
    point_strategy: str = "uniform-random"
    seed: int = 0
    use_manifest_points: bool = True
    smoothing_window: int = 31
    thresholds: tuple = DEFAULT_THRESHOLDS
    ignore_classes: tuple = ()
    max_kmedoids_iters: int = 50
    prototype_criterion: str = "consistent"
    segmenter_input: tuple = ("JF", "BF", "MF")
    f1_mode: str = "pool"
    workers: int = 1
    split: dict | None = None  # {"train": [...], "test": [...]}; overrides manifest splits

    def __post_init__(self):
        self.generators = tuple(self.generators)
        self.thresholds = tuple(float(t) for t in self.thresholds)
        self.ignore_classes = tuple(int(c) for c in self.ignore_classes)
        self.segmenter_input = tuple(self.segmenter_input)
        self.validate()

    def validate(self):
        if not self.generators:
            raise ConfigurationError("at least one generator must be enabled")
        for g in self.generators:
            if g not in GENERATORS:
                raise ConfigurationError(f"unknown generator {g!r}")
            if g not in self.routing:
                raise ConfigurationError(f"generator {g!r} has no routed input")
            parse_source(self.routing[g])
        if len(set(self.generators)) != len(self.generators):
            raise ConfigurationError("generators listed twice")
        for t in self.segmenter_input:
            parse_source(t)
        if not self.segmenter_input:
            raise ConfigurationError("segmenter_input is empty")
        PointStrategy(self.point_strategy, self.seed)
        GeneratorConfig(self.max_kmedoids_iters, self.prototype_criterion)
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigurationError("smoothing_window must be a positive odd integer")
        if not all(0 < t < 1 for t in self.thresholds):
            raise ConfigurationError("tIoU thresholds must lie in (0, 1)")
        if self.f1_mode not in ("pool", "mean"):
            raise ConfigurationError("f1_mode must be 'pool' or 'mean'")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(self.max_kmedoids_iters, self.prototype_criterion)

    @property
    def strategy(self) -> PointStrategy:
        return PointStrategy(self.point_strategy, self.seed)

    def to_json(self) -> dict:
        out = asdict(self)
        for k in ("generators", "thresholds", "ignore_classes", "segmenter_input"):
            out[k] = list(out[k])
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        routing = dict(DEFAULT_ROUTING)
        routing.update(obj.get("routing", {}))
        return cls(**{**obj, "routing": routing})


class VideoInputs:
    """Lazily loaded input streams of one manifest video."""

    def __init__(self, manifest: io.DatasetManifest, entry: io.VideoEntry):
        self.manifest = manifest
        self.entry = entry
        self._cache = {}

    def _skeleton(self):
        if "skel" not in self._cache:
            if self.entry.skeleton is None:
                raise ConfigurationError(f"video {self.entry.id} has no skeleton file")
            self._cache["skel"] = io.read_skeleton(
                self.entry.skeleton, self.manifest.joint_count, self.manifest.channel_count
            )
            self._cache["topo"] = io.read_topology(self.manifest.topology)
        return self._cache["skel"]

    def token(self, token: str) -> np.ndarray:
        if token in self._cache:
            return self._cache[token]
        if token in RAW_TOKENS:
            skel = self._skeleton()
            if token == "J":
                mat = flatten(skel)
            elif token == "B":
                mat = flatten(derive_bone(skel, self._cache["topo"]))
            else:
                mat = flatten(derive_motion(skel))
        else:
            modality = FEATURE_TOKENS[token]
            if modality not in self.entry.features:
                raise ConfigurationError(f"video {self.entry.id} has no {modality} features")
            mat = io.read_features(self.entry.features[modality])
        self._cache[token] = mat
        return mat

    def source(self, source: str) -> np.ndarray:
        tokens = parse_source(source)
        mats = [self.token(t) for t in tokens]
        lengths = {len(m) for m in mats}
        if len(lengths) != 1:
            raise LoadError(f"streams of video {self.entry.id} differ in frame count: {sorted(lengths)}")
        if len(mats) == 1:
            return mats[0]
        return fuse_many(mats)

    def concat(self, tokens) -> np.ndarray:
        mats = [self.source(t) for t in tokens]
        if len({len(m) for m in mats}) != 1:
            raise LoadError(f"streams of video {self.entry.id} differ in frame count")
        return np.concatenate(mats, axis=1)

    def labels(self) -> np.ndarray:
        if "labels" not in self._cache:
            self._cache["labels"] = io.read_labels(
                self.entry.labels, self.manifest.class_count, allow_unlabeled=False
            )
        return self._cache["labels"]


def _stage(stage: str, video_id, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except (PointsegError, ValueError, IndexError, OSError) as exc:
        raise StageError(stage, video_id, exc) from exc


def map_videos(fn, items, workers: int = 1) -> list:
    """Apply ``fn`` per item, optionally on a bounded thread pool; order is preserved."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def resolve_split(manifest: io.DatasetManifest, config: PipelineConfig) -> tuple[list, list]:
    if config.split is not None:
        train, test = list(config.split.get("train", [])), list(config.split.get("test", []))
    else:
        train, test = manifest.split_ids("train"), manifest.split_ids("test")
    known = {v.id for v in manifest.videos}
    for vid in train + test:
        if vid not in known:
            raise ValidationError(f"split names unknown video {vid!r}")
    if set(train) & set(test):
        raise ValidationError("a video is in both train and test splits")
    if not train or not test:
        raise ValidationError("pipeline needs a non-empty train and test split")
    return train, test


def obtain_points(inputs: VideoInputs, config: PipelineConfig):
    entry = inputs.entry
    labels = inputs.labels()
    if config.use_manifest_points and entry.points is not None:
        return io.read_points(entry.points, len(labels), inputs.manifest.class_count)
    return simulate_points(labels, config.strategy, entry.id)


def prototypes_for(inputs_list, points_list, source: str, class_count: int) -> Prototypes:
    feats = [inp.source(source) for inp in inputs_list]
    return compute_prototypes(feats, points_list, class_count)


def run_generator(name: str, inputs: VideoInputs, points, config: PipelineConfig, prototypes=None) -> np.ndarray:
    feats = inputs.source(config.routing[name])
    if name == "energy":
        return generate_energy_labels(feats, points)
    if name == "kmedoids":
        return generate_kmedoids_labels(feats, points, config.generator_config)
    if prototypes is None:
        raise ConfigurationError("prototype generator needs prototypes")
    return generate_prototype_labels(feats, points, prototypes, config.prototype_criterion)


def pseudo_quality(pseudo: np.ndarray, gt: np.ndarray) -> tuple[int, int, int]:
    """(labelled frames, correct labelled frames, total frames)."""
    mask = pseudo != UNLABELED
    return int(mask.sum()), int((pseudo[mask] == gt[mask]).sum()), int(len(gt))


def generate_pseudo_labels(manifest, ids, config: PipelineConfig, out_dir=None):
    """Points and per-generator plus integrated pseudo-labels for ``ids``.

    Returns ``(inputs, points, {generator: [labels]}, integrated)``; when
    ``out_dir`` is given, every artifact is also written there.
    """
    out = Path(out_dir) if out_dir is not None else None
    inputs = [VideoInputs(manifest, manifest.video(v)) for v in ids]

    def points_of(inp):
        pts = _stage("points", inp.entry.id, obtain_points, inp, config)
        if out is not None:
            io.write_points(out / "points" / f"{inp.entry.id}.csv", pts)
        return pts

    points = map_videos(points_of, inputs, config.workers)

    protos = None
    if "prototype" in config.generators:
        protos = _stage(
            "prototypes", None, prototypes_for, inputs, points, config.routing["prototype"], manifest.class_count
        )

    per_gen = {}
    for name in config.generators:
        def gen_one(args, name=name):
            inp, pts = args
            labels = _stage(f"pseudo:{name}", inp.entry.id, run_generator, name, inp, pts, config, protos)
            if out is not None:
                io.write_labels(out / "pseudo" / name / f"{inp.entry.id}.txt", labels)
            return labels

        per_gen[name] = map_videos(gen_one, list(zip(inputs, points)), config.workers)

    integrated = []
    for k, inp in enumerate(inputs):
        merged = _stage("integrate", inp.entry.id, integrate, [per_gen[g][k] for g in config.generators])
        if out is not None:
            io.write_labels(out / "pseudo" / "integrated" / f"{inp.entry.id}.txt", merged)
        integrated.append(merged)
    return inputs, points, per_gen, integrated


def format_report(report: MetricReport) -> str:
    thresholds = sorted(report.f1)
    head = ["Acc", "Edit"] + [f"F1@{round(t * 100):d}" for t in thresholds]
    vals = [report.acc, report.edit] + [report.f1[t][0] for t in thresholds]
    widths = [max(len(h), 6) for h in head]
    line1 = "  ".join(h.rjust(w) for h, w in zip(head, widths))
    line2 = "  ".join(f"{v:.1f}".rjust(w) for v, w in zip(vals, widths))
    return line1 + "\n" + line2


def run_pipeline(manifest: io.DatasetManifest, config: PipelineConfig, out_dir) -> MetricReport:
    """Full experiment; writes points, pseudo-labels, model, predictions and reports.

    Artifacts under ``out_dir``::

        config.json, points/, pseudo/<generator>/, pseudo/integrated/,
        model.json, predictions/, pseudo_quality.json, report.json
    """
    out = Path(out_dir)
    train, test = resolve_split(manifest, config)
    io.write_json(out / "config.json", config.to_json())

    inputs, _, per_gen, integrated = generate_pseudo_labels(manifest, train, config, out)

    quality = {}
    for name, seqs in list(per_gen.items()) + [("integrated", integrated)]:
        labelled = correct = total = 0
        for inp, seq in zip(inputs, seqs):
            a, b, c = pseudo_quality(seq, inp.labels())
            labelled, correct, total = labelled + a, correct + b, total + c
        quality[name] = {
            "accuracy": 100.0 * correct / labelled if labelled else 0.0,
            "coverage": 100.0 * labelled / total,
        }
    io.write_json(out / "pseudo_quality.json", quality)

    train_feats = [_stage("features", i.entry.id, i.concat, config.segmenter_input) for i in inputs]
    model = _stage("train", None, fit, train_feats, integrated, manifest.class_count)
    io.write_model(out / "model.json", model)

    test_inputs = [VideoInputs(manifest, manifest.video(v)) for v in test]

    def predict_one(inp):
        feats = _stage("features", inp.entry.id, inp.concat, config.segmenter_input)
        raw = _stage("predict", inp.entry.id, predict, model, feats)
        pred = _stage("smooth", inp.entry.id, smooth, raw, config.smoothing_window)
        io.write_labels(out / "predictions" / f"{inp.entry.id}.txt", pred)
        return pred

    preds = map_videos(predict_one, test_inputs, config.workers)
    gts = [_stage("labels", inp.entry.id, inp.labels) for inp in test_inputs]
    report = _stage(
        "evaluate", None, evaluate_dataset, preds, gts, config.thresholds, config.ignore_classes, config.f1_mode
    )
    io.write_json(out / "report.json", report.to_json())
    log.info("pipeline finished: %d train, %d test videos", len(train), len(test))
    return report
