"""Synthetic datasets with known segmentations.

Every video is a sequence of segments with adjacent classes distinct. For
each modality the feature row of a frame is its class mean plus i.i.d.
Gaussian noise; class means are random directions rescaled so that the
closest pair of classes sits exactly ``separation`` apart.

The skeleton stream holds a class-specific pose that drifts with a
class-specific velocity inside each segment (centred on the segment's middle
frame), plus jitter. Joint and bone data therefore carry the pose, and
motion data carries the velocity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .data import Topology
from .errors import ArgumentError
from .io import (
    MODALITIES,
    DatasetManifest,
    VideoEntry,
    manifest_to_json,
    write_features,
    write_json,
    write_labels,
    write_skeleton,
    write_topology,
)

DEFAULT_PARENTS = (-1, 0, 1, 0, 3, 0)


@dataclass(frozen=True)
class SynthSpec:
    videos: int = 20
    classes: int = 5
    segments_per_video: int = 10
    min_segment_length: int = 30
    max_segment_length: int = 80
    feature_dim: int = 8
    separation: float = 1.0
    noise: float = 0.1
    seed: int = 0
    test_videos: int = 0
    joint_count: int = len(DEFAULT_PARENTS)
    channel_count: int = 3
    pose_scale: float = 1.0
    velocity_scale: float = 0.005
    skeleton_noise_ratio: float = 0.005

    def validate(self):
        if self.videos < 1:
            raise ArgumentError("videos must be >= 1")
        if self.classes < 1:
            raise ArgumentError("classes must be >= 1")
        if self.segments_per_video < 1:
            raise ArgumentError("segments_per_video must be >= 1")
        if self.segments_per_video > 1 and self.classes < 2:
            raise ArgumentError("adjacent segments need distinct classes; use classes >= 2")
        if self.min_segment_length < 1 or self.min_segment_length > self.max_segment_length:
            raise ArgumentError(
                f"empty segment length range [{self.min_segment_length}, {self.max_segment_length}]"
            )
        if self.feature_dim < 1:
            raise ArgumentError("feature_dim must be >= 1")
        if not self.separation > 0:
            raise ArgumentError("separation must be > 0")
        if self.noise < 0:
            raise ArgumentError("noise must be >= 0")
        if not 0 <= self.test_videos <= self.videos:
            raise ArgumentError("test_videos must lie in [0, videos]")
        if self.joint_count < 1 or self.channel_count not in (2, 3):
            raise ArgumentError("need joint_count >= 1 and channel_count in {2, 3}")


def separated_means(rng: np.random.Generator, count: int, dim: int, separation: float) -> np.ndarray:
    """``count`` random points whose minimum pairwise distance equals ``separation``."""
    means = rng.standard_normal((count, dim))
    if count == 1:
        norm = np.linalg.norm(means[0])
        return means * (separation / norm if norm > 0 else 0.0)
    closest = pdist(means).min()
    return means * (separation / closest)


def default_topology(joint_count: int) -> Topology:
    if joint_count <= len(DEFAULT_PARENTS):
        return Topology(DEFAULT_PARENTS[:joint_count])
    # extra joints hang off the previous one as a chain
    return Topology(DEFAULT_PARENTS + tuple(range(len(DEFAULT_PARENTS) - 1, joint_count - 1)))


def sample_labels(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    classes = []
    for _ in range(spec.segments_per_video):
        choices = [c for c in range(spec.classes) if not classes or c != classes[-1]]
        classes.append(int(rng.choice(choices)))
    lengths = rng.integers(spec.min_segment_length, spec.max_segment_length + 1, size=len(classes))
    return np.repeat(np.asarray(classes, dtype=np.int64), lengths)


def make_video(rng: np.random.Generator, spec: SynthSpec, means: dict, poses, velocities):
    """Labels, skeleton ``(T, J, C)`` and per-modality features for one video."""
    labels = sample_labels(rng, spec)
    t = len(labels)
    features = {
        m: means[m][labels] + spec.noise * rng.standard_normal((t, spec.feature_dim))
        for m in MODALITIES
    }
    cut = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate(([0], cut))
    ends = np.concatenate((cut, [t]))
    offset = np.empty(t)
    for s, e in zip(starts, ends):
        offset[s:e] = np.arange(e - s) - (e - s - 1) / 2.0
    jitter = spec.noise * spec.skeleton_noise_ratio
    skeleton = (
        poses[labels]
        + velocities[labels] * offset[:, None, None]
        + jitter * rng.standard_normal((t, spec.joint_count, spec.channel_count))
    )
    return labels, skeleton, features


def generate_synthetic(spec: SynthSpec, out_dir) -> DatasetManifest:
    """Write a complete dataset under ``out_dir`` and return its manifest.

    The last ``spec.test_videos`` videos are marked ``test``, the rest
    ``train``. Output is byte-identical for identical specs.
    """
    spec.validate()
    out = Path(out_dir).resolve()
    shared = np.random.default_rng([spec.seed, 0])
    means = {m: separated_means(shared, spec.classes, spec.feature_dim, spec.separation) for m in MODALITIES}
    shape = (spec.classes, spec.joint_count, spec.channel_count)
    poses = spec.pose_scale * shared.standard_normal(shape)
    velocities = spec.velocity_scale * shared.standard_normal(shape)
    topology = default_topology(spec.joint_count)
    write_topology(out / "topology.txt", topology)

    width = max(3, len(str(spec.videos - 1)))
    videos = []
    for i in range(spec.videos):
        vid = f"v{i:0{width}d}"
        rng = np.random.default_rng([spec.seed, 1, i])
        labels, skeleton, features = make_video(rng, spec, means, poses, velocities)
        entry = VideoEntry(
            id=vid,
            labels=write_labels(out / "labels" / f"{vid}.txt", labels),
            skeleton=write_skeleton(out / "skeleton" / f"{vid}.csv", skeleton),
            features={m: write_features(out / "features" / m / f"{vid}.csv", features[m]) for m in MODALITIES},
            split="test" if i >= spec.videos - spec.test_videos else "train",
        )
        videos.append(entry)

    manifest = DatasetManifest(
        path=out / "manifest.json",
        class_count=spec.classes,
        videos=videos,
        class_names=[f"class{c}" for c in range(spec.classes)],
        topology=out / "topology.txt",
        joint_count=spec.joint_count,
        channel_count=spec.channel_count,
    )
    write_json(manifest.path, manifest_to_json(manifest))
    write_json(out / "synth_spec.json", asdict(spec))
    return manifest
