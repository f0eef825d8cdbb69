"""Command-line entry point: ``pointseg <verb> --manifest M --out DIR``.

Exit codes: 0 success, 2 validation error, 3 runtime stage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .annotation import STRATEGIES, PointStrategy, simulate_points
from .data import derive_bone, derive_motion
from .errors import PointsegError, StageError, ValidationError
from .metrics import evaluate_dataset
from .pipeline import (
    GENERATORS,
    PipelineConfig,
    VideoInputs,
    format_report,
    generate_pseudo_labels,
    run_pipeline,
)
from .pseudo_label import PROTOTYPE_CRITERIA, integrate
from .segmenter import fit, predict, smooth
from .synthetic import SynthSpec, generate_synthetic

log = logging.getLogger("pointseg")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


def _routes(base, values):
    routing = dict(base)
    for item in values or ():
        name, sep, source = item.partition("=")
        if not sep:
            raise ValidationError(f"--route expects GENERATOR=SOURCE, got {item!r}")
        routing[name] = source
    return routing


def _select_ids(manifest, split, split_file=None):
    if split_file:
        groups = io.read_split_file(split_file)
        ids = groups["train"] + groups["test"] if split == "all" else groups[split]
    elif split == "all":
        ids = [v.id for v in manifest.videos]
    else:
        ids = manifest.split_ids(split)
    if not ids:
        raise ValidationError(f"no videos in split {split!r}")
    for vid in ids:
        manifest.video(vid)
    return ids


def _config_from_args(args) -> PipelineConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise io.LoadError(f"cannot read config: {exc}", path=args.config) from None
    cfg = PipelineConfig.from_json(base)
    overrides = {}
    if getattr(args, "route", None):
        overrides["routing"] = _routes(cfg.routing, args.route)
    for name, key in (
        ("generators", "generators"),
        ("strategy", "point_strategy"),
        ("seed", "seed"),
        ("window", "smoothing_window"),
        ("thresholds", "thresholds"),
        ("ignore", "ignore_classes"),
        ("max_kmedoids_iters", "max_kmedoids_iters"),
        ("prototype_criterion", "prototype_criterion"),
        ("segmenter_input", "segmenter_input"),
        ("f1_mode", "f1_mode"),
        ("workers", "workers"),
    ):
        value = getattr(args, name, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "split_file", None):
        overrides["split"] = io.read_split_file(args.split_file)
    return replace(cfg, **overrides) if overrides else cfg


def cmd_derive(args):
    manifest = io.load_manifest(args.manifest)
    out = Path(args.out)
    topo = io.read_topology(manifest.topology) if manifest.topology else None
    for vid in _select_ids(manifest, args.split, args.split_file):
        entry = manifest.video(vid)
        if entry.skeleton is None:
            log.warning("video %s has no skeleton; skipped", vid)
            continue
        skel = io.read_skeleton(entry.skeleton, manifest.joint_count, manifest.channel_count)
        io.write_skeleton(out / "derived" / "bone" / f"{vid}.csv", derive_bone(skel, topo))
        io.write_skeleton(out / "derived" / "motion" / f"{vid}.csv", derive_motion(skel))
    return EXIT_OK


def cmd_points(args):
    manifest = io.load_manifest(args.manifest)
    strategy = PointStrategy(args.strategy, args.seed)
    for vid in _select_ids(manifest, args.split, args.split_file):
        labels = io.read_labels(manifest.video(vid).labels, manifest.class_count, allow_unlabeled=False)
        io.write_points(Path(args.out) / "points" / f"{vid}.csv", simulate_points(labels, strategy, vid))
    return EXIT_OK


def cmd_pseudo(args):
    manifest = io.load_manifest(args.manifest)
    cfg = _config_from_args(args)
    ids = _select_ids(manifest, args.split, args.split_file)
    if args.points_dir:
        for vid in ids:
            manifest.video(vid).points = Path(args.points_dir) / f"{vid}.csv"
        cfg = replace(cfg, use_manifest_points=True)
    generate_pseudo_labels(manifest, ids, cfg, args.out)
    return EXIT_OK


def cmd_integrate(args):
    manifest = io.load_manifest(args.manifest)
    for vid in _select_ids(manifest, args.split, args.split_file):
        seqs = [io.read_labels(Path(d) / f"{vid}.txt", manifest.class_count) for d in args.inputs]
        io.write_labels(Path(args.out) / "pseudo" / "integrated" / f"{vid}.txt", integrate(seqs))
    return EXIT_OK


def cmd_train(args):
    manifest = io.load_manifest(args.manifest)
    cfg = _config_from_args(args)
    ids = _select_ids(manifest, args.split, args.split_file)
    feats, labels = [], []
    for vid in ids:
        inp = VideoInputs(manifest, manifest.video(vid))
        feats.append(inp.concat(cfg.segmenter_input))
        labels.append(io.read_labels(Path(args.pseudo_dir) / f"{vid}.txt", manifest.class_count))
    io.write_model(Path(args.out) / "model.json", fit(feats, labels, manifest.class_count))
    return EXIT_OK


def cmd_predict(args):
    manifest = io.load_manifest(args.manifest)
    cfg = _config_from_args(args)
    model = io.read_model(args.model)
    for vid in _select_ids(manifest, args.split, args.split_file):
        inp = VideoInputs(manifest, manifest.video(vid))
        pred = smooth(predict(model, inp.concat(cfg.segmenter_input)), cfg.smoothing_window)
        io.write_labels(Path(args.out) / "predictions" / f"{vid}.txt", pred)
    return EXIT_OK


def cmd_eval(args):
    manifest = io.load_manifest(args.manifest)
    cfg = _config_from_args(args)
    preds, gts = [], []
    for vid in _select_ids(manifest, args.split, args.split_file):
        gts.append(io.read_labels(manifest.video(vid).labels, manifest.class_count, allow_unlabeled=False))
        preds.append(io.read_labels(Path(args.pred_dir) / f"{vid}.txt", manifest.class_count))
    report = evaluate_dataset(preds, gts, cfg.thresholds, cfg.ignore_classes, cfg.f1_mode)
    io.write_json(Path(args.out) / "report.json", report.to_json())
    print(format_report(report))
    print(io.dump_json(report.to_json()), end="")
    return EXIT_OK


def cmd_pipeline(args):
    manifest = io.load_manifest(args.manifest)
    report = run_pipeline(manifest, _config_from_args(args), args.out)
    print(format_report(report))
    print(io.dump_json(report.to_json()), end="")
    return EXIT_OK


def cmd_synth(args):
    spec = SynthSpec(
        videos=args.videos,
        classes=args.classes,
        segments_per_video=args.segments,
        min_segment_length=args.min_length,
        max_segment_length=args.max_length,
        feature_dim=args.feature_dim,
        separation=args.separation,
        noise=args.noise,
        seed=args.seed,
        test_videos=args.test_videos,
    )
    manifest = generate_synthetic(spec, args.out)
    print(manifest.path)
    return EXIT_OK


def _add_common(p, split_default="all"):
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split", choices=("train", "test", "all"), default=split_default)
    p.add_argument("--split-file", help='JSON {"train": [...], "test": [...]} overriding manifest splits')


def _add_config(p):
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--route", action="append", metavar="GEN=SRC", help="e.g. prototype=J+JF")
    p.add_argument("--generators", nargs="+", choices=GENERATORS)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int, help="smoothing window (odd)")
    p.add_argument("--thresholds", type=float, nargs="+")
    p.add_argument("--ignore", type=int, nargs="+", help="class ids excluded from metrics")
    p.add_argument("--max-kmedoids-iters", type=int)
    p.add_argument("--prototype-criterion", choices=PROTOTYPE_CRITERIA)
    p.add_argument("--segmenter-input", nargs="+", help="sources concatenated for the classifier")
    p.add_argument("--f1-mode", choices=("pool", "mean"))
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointseg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("derive", help="write bone and motion streams")
    _add_common(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("points", help="simulate point annotations")
    _add_common(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="uniform-random")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_points)

    p = sub.add_parser("pseudo", help="generate and integrate pseudo-labels")
    _add_common(p, "train")
    _add_config(p)
    p.add_argument("--points-dir", help="read points from DIR/<id>.csv")
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("integrate", help="intersect pseudo-label directories")
    _add_common(p, "train")
    p.add_argument("--inputs", nargs="+", required=True, help="directories of <id>.txt label files")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("train", help="fit the class-mean classifier")
    _add_common(p, "train")
    _add_config(p)
    p.add_argument("--pseudo-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict and smooth frame labels")
    _add_common(p, "test")
    _add_config(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    _add_common(p, "test")
    _add_config(p)
    p.add_argument("--pred-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run the full experiment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split-file")
    _add_config(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--videos", type=int, default=70)
    p.add_argument("--test-videos", type=int, default=20)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--min-length", type=int, default=30)
    p.add_argument("--max-length", type=int, default=80)
    p.add_argument("--feature-dim", type=int, default=8)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValidationError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PointsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
